//! The interaction matrix `M_λ(ζ)` (diagonal `g_λ(ζ_i)`, off-diagonal
//! `-G_λ(ζ_i, ζ_j)`), its determinant `ψ_λ`, eigenstructure, circulant
//! specialisation and the reduced energy in `Λ = μ^{1/2}` variables.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::bubble::EnergyConstants;
use crate::error::{Error, Result};
use crate::greens::{green, lambda1, richardson_central, robin, DomainSpec, FdEstimate};
use crate::linalg::{determinant, jacobi_eigen, EigenDecomp, SquareMatrix};
use crate::point::{dist, Point3};

/// Points closer than this are rejected as duplicates.
pub const DUPLICATE_DISTANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionMatrix {
    pub lambda: f64,
    pub points: Vec<Point3>,
    pub entries: SquareMatrix,
    /// Largest mode-series tail bound over all entries.
    pub max_tail_bound: f64,
    pub max_truncation_order: usize,
}

impl InteractionMatrix {
    pub fn size(&self) -> usize {
        self.entries.n
    }

    /// Wrap an explicit symmetric matrix (no Green evaluations).
    pub fn from_entries(lambda: f64, entries: SquareMatrix) -> Self {
        InteractionMatrix { lambda, points: Vec::new(), entries, max_tail_bound: 0.0, max_truncation_order: 0 }
    }
}

pub fn check_distinct(zeta: &[Point3]) -> Result<()> {
    for i in 0..zeta.len() {
        for j in 0..i {
            if dist(&zeta[i], &zeta[j]) < DUPLICATE_DISTANCE {
                return Err(Error::DuplicatePoints(j, i));
            }
        }
    }
    Ok(())
}

pub fn build_matrix(d: &DomainSpec, lambda: f64, zeta: &[Point3], tol: f64) -> Result<InteractionMatrix> {
    check_distinct(zeta)?;
    let k = zeta.len();
    if k == 0 {
        return Err(Error::InvalidConfiguration("at least one point is required".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let evals = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                robin(d, lambda, &zeta[i], tol)
            } else {
                green(d, lambda, &zeta[i], &zeta[j], tol).map(|mut g| {
                    g.value = -g.value;
                    g
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut m = SquareMatrix::zeros(k);
    let mut tail: f64 = 0.0;
    let mut order = 0;
    for (&(i, j), e) in pairs.iter().zip(&evals) {
        m.set(i, j, e.value);
        m.set(j, i, e.value);
        tail = tail.max(e.tail_bound);
        order = order.max(e.truncation_order);
    }
    Ok(InteractionMatrix { lambda, points: zeta.to_vec(), entries: m, max_tail_bound: tail, max_truncation_order: order })
}

/// `ψ_λ(ζ) = det M_λ(ζ)`.
pub fn psi(m: &InteractionMatrix) -> f64 {
    determinant(&m.entries)
}

pub fn eigen(m: &InteractionMatrix) -> Result<EigenDecomp> {
    jacobi_eigen(&m.entries)
}

/// Eigenvalues `ν_l = Σ_j a_j cos(2π jl/k)` of the symmetric circulant matrix
/// with first row `a`, in Fourier order `l = 0..k`.
pub fn circulant_eigenvalues(first_row: &[f64]) -> Result<Vec<f64>> {
    let k = first_row.len();
    let scale = first_row.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let defect = (1..k).map(|j| (first_row[j] - first_row[k - j]).abs()).fold(0.0, f64::max);
    if defect > 1e-12 * scale {
        return Err(Error::AsymmetricRow { defect });
    }
    (0..k)
        .map(|l| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &aj) in first_row.iter().enumerate() {
                let th = 2.0 * PI * ((j * l) % k) as f64 / k as f64;
                re += aj * th.cos();
                im += aj * th.sin();
            }
            if im.abs() > 1e-12 * scale * k as f64 {
                return Err(Error::AsymmetricRow { defect: im.abs() });
            }
            Ok(re)
        })
        .collect()
}

/// `F(Λ) = k a0 + a1 ΛᵀMΛ + a2 λ ΣΛ_i⁴ - a3 Σ Λ_i² (MΛ)_i²` and its gradient.
pub fn reduced_energy_f(m: &InteractionMatrix, big_lambda: &[f64], lambda: f64, consts: &EnergyConstants) -> Result<(f64, Vec<f64>)> {
    let k = m.size();
    if big_lambda.len() != k {
        return Err(Error::InvalidConfiguration(format!("Λ has {} entries for a {k}×{k} matrix", big_lambda.len())));
    }
    let [a0, a1, a2, a3] = consts.values();
    let ml = m.entries.mul_vec(big_lambda);
    let quad: f64 = big_lambda.iter().zip(&ml).map(|(x, y)| x * y).sum();
    let quart: f64 = big_lambda.iter().map(|x| x.powi(4)).sum();
    let cross: f64 = big_lambda.iter().zip(&ml).map(|(x, y)| x * x * y * y).sum();
    let value = k as f64 * a0 + a1 * quad + a2 * lambda * quart - a3 * cross;
    let grad = (0..k)
        .map(|p| {
            let back: f64 = (0..k).map(|i| big_lambda[i].powi(2) * ml[i] * m.entries.get(i, p)).sum();
            2.0 * a1 * ml[p] + 4.0 * a2 * lambda * big_lambda[p].powi(3)
                - a3 * (2.0 * big_lambda[p] * ml[p] * ml[p] + 2.0 * back)
        })
        .collect();
    Ok((value, grad))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsiDerivatives {
    pub psi: f64,
    /// `∂ψ/∂ζ_{i,c}` flattened as `3i + c`.
    pub grad_zeta: Vec<FdEstimate>,
    pub d_lambda: FdEstimate,
    pub hessian_zeta: Vec<Vec<f64>>,
    pub hessian_error: f64,
    pub hessian_eigenvalues: Vec<f64>,
    pub step_zeta: f64,
    pub step_lambda: f64,
}

/// Finite-difference derivatives of `ψ_λ(ζ)`. Default steps: `1e-3·thickness`
/// in `ζ`, `1e-4·λ₁` in `λ`; one Richardson level each.
pub fn psi_derivatives(
    d: &DomainSpec,
    lambda: f64,
    zeta: &[Point3],
    step_zeta: Option<f64>,
    step_lambda: Option<f64>,
    tol: f64,
) -> Result<PsiDerivatives> {
    let h = step_zeta.unwrap_or(1e-3 * d.thickness());
    let hl = step_lambda.unwrap_or(1e-4 * lambda1(d));
    for z in zeta {
        if d.boundary_distance(z) <= 2.0 * h {
            return Err(Error::StencilLeavesDomain);
        }
    }
    if lambda - hl <= 0.0 || lambda + hl >= lambda1(d) {
        return Err(Error::StencilLeavesDomain);
    }
    let n = 3 * zeta.len();
    let psi_at = |z: &[Point3], l: f64| -> Result<f64> { Ok(psi(&build_matrix(d, l, z, tol)?)) };
    let shifted = |moves: &[(usize, f64)]| -> Vec<Point3> {
        let mut z = zeta.to_vec();
        for &(c, delta) in moves {
            z[c / 3][c % 3] += delta;
        }
        z
    };
    let psi0 = psi_at(zeta, lambda)?;
    let grad_zeta = (0..n)
        .into_par_iter()
        .map(|c| richardson_central(|t| psi_at(&shifted(&[(c, t)]), lambda), 0.0, h))
        .collect::<Result<Vec<_>>>()?;
    let d_lambda = richardson_central(|l| psi_at(zeta, l), lambda, hl)?;

    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let second = |i: usize, j: usize, h: f64| -> Result<f64> {
        if i == j {
            let p = psi_at(&shifted(&[(i, h)]), lambda)?;
            let m = psi_at(&shifted(&[(i, -h)]), lambda)?;
            Ok((p - 2.0 * psi0 + m) / (h * h))
        } else {
            let pp = psi_at(&shifted(&[(i, h), (j, h)]), lambda)?;
            let pm = psi_at(&shifted(&[(i, h), (j, -h)]), lambda)?;
            let mp = psi_at(&shifted(&[(i, -h), (j, h)]), lambda)?;
            let mm = psi_at(&shifted(&[(i, -h), (j, -h)]), lambda)?;
            Ok((pp - pm - mp + mm) / (4.0 * h * h))
        }
    };
    let entries = cells
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, f64)> {
            let coarse = second(i, j, h)?;
            let fine = second(i, j, 0.5 * h)?;
            Ok(((4.0 * fine - coarse) / 3.0, (fine - coarse).abs() / 3.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hess = SquareMatrix::zeros(n);
    let mut herr: f64 = 0.0;
    for (&(i, j), &(v, e)) in cells.iter().zip(&entries) {
        hess.set(i, j, v);
        hess.set(j, i, v);
        herr = herr.max(e);
    }
    let hessian_eigenvalues = jacobi_eigen(&hess)?.values;
    Ok(PsiDerivatives {
        psi: psi0,
        grad_zeta,
        d_lambda,
        hessian_zeta: hess.rows(),
        hessian_error: herr,
        hessian_eigenvalues,
        step_zeta: h,
        step_lambda: hl,
    })
}
