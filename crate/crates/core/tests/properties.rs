mod common;

use common::*;

#[test]
fn green_is_symmetric_and_rotation_invariant() {
    let worst = green_symmetry(11, 40).unwrap();
    assert!(worst <= 1e-10);
}

#[test]
fn bubble_solves_critical_equation() {
    bubble_pde(12, 200).unwrap();
}

#[test]
fn kernels_agree_with_finite_differences() {
    kernels_vs_fd(13, 100).unwrap();
}

#[test]
fn energy_is_permutation_and_rotation_invariant() {
    energy_invariance(14, 3).unwrap();
}
