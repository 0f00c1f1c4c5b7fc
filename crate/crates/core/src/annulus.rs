//! Regular-polygon configurations on annuli: the row-sum eigenvalue
//! `σ̃₁(λ, r)`, the critical pair `(λ₀, r₀)`, the concentration rate `μ₀`, the
//! reduced radial profile, empirical thickness thresholds and the two-bubble
//! certificate.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::bubble::EnergyConstants;
use crate::error::{Error, Result};
use crate::greens::{free_kernel, lambda1, richardson_central, DomainSpec, FdEstimate, ModeKernel};
use crate::interaction::{build_matrix, circulant_eigenvalues, eigen, psi};
use crate::point::Point3;

/// Number of Chebyshev nodes in the radial scan.
pub const GRID_POINTS: usize = 129;
/// Scan margin from each boundary sphere, as a fraction of the thickness.
pub const GRID_MARGIN: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolygonConfig {
    pub k: usize,
    pub r: f64,
    pub a: f64,
}

impl PolygonConfig {
    pub fn new(k: usize, r: f64, a: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidConfiguration(format!("polygon needs k >= 2, got {k}")));
        }
        if !(a > 0.0 && a < r && r < 1.0) {
            return Err(Error::InvalidConfiguration(format!("need 0 < a < r < 1, got a={a}, r={r}")));
        }
        Ok(PolygonConfig { k, r, a })
    }
}

/// `ζ_j(r) = (r cos(2π(j-1)/k), r sin(2π(j-1)/k), 0)`.
pub fn polygon_points(c: &PolygonConfig) -> Vec<Point3> {
    (0..c.k)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / c.k as f64;
            [c.r * th.cos(), c.r * th.sin(), 0.0]
        })
        .collect()
}

/// The Robin value and the off-diagonal Green values along the first row of
/// the polygon matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolygonRow {
    pub robin: f64,
    /// `G_λ(ζ_1, ζ_{j+1})`, `j = 1..k`.
    pub green: Vec<f64>,
    pub tail_bound: f64,
    pub truncation_order: usize,
}

impl PolygonRow {
    /// `σ̃₁ = g_λ(ζ_1) - Σ_j G_λ(ζ_1, ζ_{j+1})`.
    pub fn sigma1(&self) -> f64 {
        self.robin - self.green.iter().sum::<f64>()
    }

    /// First row `(g, -G_1, …, -G_{k-1})` of the circulant matrix.
    pub fn first_row(&self) -> Vec<f64> {
        std::iter::once(self.robin).chain(self.green.iter().map(|g| -g)).collect()
    }
}

/// All Green data for one `(a, k, λ, r)`; the mode kernel and radial
/// coefficients are shared by every entry of the row.
pub fn polygon_row(a: f64, k: usize, lambda: f64, r: f64, tol: f64) -> Result<PolygonRow> {
    let d = DomainSpec::annulus(a)?;
    PolygonConfig::new(k, r, a)?;
    let kernel = ModeKernel::for_target_radius(&d, lambda, r, r, tol)?;
    let rc = kernel.radial_coefficients(r, tol)?;
    let robin = rc.sum(1.0);
    let green = (1..k)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / k as f64;
            let chord = 2.0 * r * (0.5 * th).sin();
            free_kernel(lambda, chord) - rc.sum(th.cos())
        })
        .collect();
    Ok(PolygonRow { robin, green, tail_bound: rc.tail_bound, truncation_order: rc.order() })
}

pub fn sigma1_polygon(a: f64, k: usize, lambda: f64, r: f64, tol: f64) -> Result<f64> {
    Ok(polygon_row(a, k, lambda, r, tol)?.sigma1())
}

/// `f_λ(r) = k σ̃₁(λ, r)`.
pub fn f_lambda(a: f64, k: usize, lambda: f64, r: f64, tol: f64) -> Result<f64> {
    Ok(k as f64 * sigma1_polygon(a, k, lambda, r, tol)?)
}

/// Row-sum value next to the smallest circulant eigenvalue, for cross-checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sigma1Check {
    pub sigma1: f64,
    pub circulant: Vec<f64>,
    pub all_nonnegative: bool,
    pub nu0_is_min: bool,
}

pub fn sigma1_with_circulant(a: f64, k: usize, lambda: f64, r: f64, tol: f64) -> Result<Sigma1Check> {
    let row = polygon_row(a, k, lambda, r, tol)?;
    let nu = circulant_eigenvalues(&row.first_row())?;
    let all_nonnegative = nu.iter().all(|&v| v >= 0.0);
    let nu0_is_min = nu.iter().skip(1).all(|&v| v > nu[0]);
    Ok(Sigma1Check { sigma1: row.sigma1(), circulant: nu, all_nonnegative, nu0_is_min })
}

/// Chebyshev nodes on `[a + m(1-a), 1 - m(1-a)]`, ascending.
pub fn radial_grid(a: f64) -> Vec<f64> {
    let lo = a + GRID_MARGIN * (1.0 - a);
    let hi = 1.0 - GRID_MARGIN * (1.0 - a);
    let n = GRID_POINTS - 1;
    (0..=n)
        .map(|i| {
            let x = -(PI * i as f64 / n as f64).cos();
            lo + 0.5 * (hi - lo) * (1.0 + x)
        })
        .collect()
}

/// Golden-section minimisation of `f` on `[lo, hi]`.
pub fn golden_section<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > xtol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Minimum over the radial grid with golden-section refinement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialMinimum {
    pub r_min: f64,
    pub value: f64,
    pub coarse_value: f64,
    /// Grid radii of all local minima of the coarse scan.
    pub local_minima: Vec<(f64, f64)>,
}

pub fn refined_minimum<F: Fn(f64) -> Result<f64> + Sync>(f: F, grid: &[f64]) -> Result<RadialMinimum> {
    let vals = grid.par_iter().map(|&r| f(r)).collect::<Result<Vec<f64>>>()?;
    let n = vals.len();
    let (imin, &vmin) = vals.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("nonempty grid");
    if imin == 0 || imin == n - 1 {
        return Err(Error::GridTooCoarse(format!("minimum at grid edge r = {}", grid[imin])));
    }
    let local_minima = (1..n - 1)
        .filter(|&i| vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1])
        .map(|i| (grid[i], vals[i]))
        .collect();
    let (r_min, value) = golden_section(&f, grid[imin - 1], grid[imin + 1], 1e-10)?;
    if value > vmin {
        return Ok(RadialMinimum { r_min: grid[imin], value: vmin, coarse_value: vmin, local_minima });
    }
    Ok(RadialMinimum { r_min, value, coarse_value: vmin, local_minima })
}

pub fn min_sigma1(a: f64, k: usize, lambda: f64, tol: f64) -> Result<RadialMinimum> {
    refined_minimum(|r| sigma1_polygon(a, k, lambda, r, tol), &radial_grid(a))
}

/// `min_r g_λ(ζ_1(r))` on the same grid (λ* predicate).
pub fn min_robin_on_ray(a: f64, lambda: f64, tol: f64) -> Result<RadialMinimum> {
    let d = DomainSpec::annulus(a)?;
    refined_minimum(
        |r| {
            let kernel = ModeKernel::for_target_radius(&d, lambda, r, r, tol)?;
            Ok(kernel.radial_coefficients(r, tol)?.sum(1.0))
        },
        &radial_grid(a),
    )
}

/// Bisection for the supremum of `λ` with `pred(λ)` true on `[lo, hi]`.
fn bisect_sup<P: Fn(f64) -> Result<bool>>(pred: P, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Series tolerance for the analyzer's Green evaluations.
pub const SERIES_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lambda0 {
    pub lambda0: f64,
    pub r0: f64,
    pub sigma1_at_crit: f64,
    /// Near-zero local minima of `σ̃₁(λ₀, ·)` on the grid.
    pub other_minima: Vec<(f64, f64)>,
    pub lambda_tol: f64,
}

pub fn find_lambda0(a: f64, k: usize, tol: f64) -> Result<Lambda0> {
    let start = min_sigma1(a, k, 0.0, SERIES_TOL)?;
    if start.value <= 0.0 {
        return Err(Error::NoPositiveStart { min_sigma: start.value });
    }
    let l1 = lambda1(&DomainSpec::annulus(a)?);
    let pred = |l: f64| -> Result<bool> { Ok(min_sigma1(a, k, l, SERIES_TOL)?.value > 0.0) };
    let lo = tol;
    if !pred(lo)? {
        return Err(Error::NoPositiveStart { min_sigma: min_sigma1(a, k, lo, SERIES_TOL)?.value });
    }
    let lambda0 = bisect_sup(pred, lo, l1 - tol, tol)?;
    let m = min_sigma1(a, k, lambda0, SERIES_TOL)?;
    let spread = m.value.abs().max(1e-12) * 10.0 + 1e-6;
    let other_minima = m.local_minima.iter().copied().filter(|&(_, v)| v.abs() <= spread).collect();
    Ok(Lambda0 { lambda0, r0: m.r_min, sigma1_at_crit: m.value, other_minima, lambda_tol: tol })
}

/// `λ*` restricted to the polygon ray: supremum of `λ` with `min_r g_λ > 0`.
pub fn lambda_star_on_ray(a: f64, tol: f64) -> Result<f64> {
    let l1 = lambda1(&DomainSpec::annulus(a)?);
    bisect_sup(|l| Ok(min_robin_on_ray(a, l, SERIES_TOL)?.value > 0.0), tol, l1 - tol, tol)
}

/// `μ₀ = -a1 f / (k a2 λ - a3 f²)` with `f = f_λ(r)`.
pub fn mu0_from_f(k: usize, lambda: f64, f: f64, consts: &EnergyConstants) -> Result<f64> {
    if f > 0.0 {
        return Err(Error::WrongRegime { f });
    }
    let [_, a1, a2, a3] = consts.values();
    let den = k as f64 * a2 * lambda - a3 * f * f;
    if !(den > 1e-300) {
        return Err(Error::DegenerateDenominator(den));
    }
    Ok(-a1 * f / den)
}

pub fn mu0(a: f64, k: usize, lambda: f64, r: f64, consts: &EnergyConstants) -> Result<f64> {
    mu0_from_f(k, lambda, f_lambda(a, k, lambda, r, SERIES_TOL)?, consts)
}

/// `F_λ(μ, r) = k a0 + 2 a1 μ f + k a2 λ μ² - a3 μ² f²`.
pub fn reduced_radial_energy(k: usize, lambda: f64, mu: f64, f: f64, consts: &EnergyConstants) -> f64 {
    let [a0, a1, a2, a3] = consts.values();
    let kf = k as f64;
    kf * a0 + 2.0 * a1 * mu * f + kf * a2 * lambda * mu * mu - a3 * mu * mu * f * f
}

/// `∂F_λ/∂μ`.
pub fn reduced_radial_energy_dmu(k: usize, lambda: f64, mu: f64, f: f64, consts: &EnergyConstants) -> f64 {
    let [_, a1, a2, a3] = consts.values();
    2.0 * a1 * f + 2.0 * (k as f64 * a2 * lambda - a3 * f * f) * mu
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub f: f64,
    pub mu: Option<f64>,
    pub phi: Option<f64>,
    pub in_regime: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedProfile {
    pub rows: Vec<ProfileRow>,
    /// Grid radii where `Φ` has a local extremum among in-regime rows.
    pub critical_r: Vec<f64>,
}

pub fn reduced_profile(a: f64, k: usize, lambda: f64, r_grid: &[f64], consts: &EnergyConstants) -> Result<ReducedProfile> {
    let rows = r_grid
        .par_iter()
        .map(|&r| -> Result<ProfileRow> {
            let f = f_lambda(a, k, lambda, r, SERIES_TOL)?;
            if f >= 0.0 {
                return Ok(ProfileRow { r, f, mu: None, phi: None, in_regime: false });
            }
            let mu = mu0_from_f(k, lambda, f, consts)?;
            let phi = reduced_radial_energy(k, lambda, mu, f, consts) - k as f64 * consts.a0.closed_form;
            Ok(ProfileRow { r, f, mu: Some(mu), phi: Some(phi), in_regime: true })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut critical_r = Vec::new();
    for i in 1..rows.len().saturating_sub(1) {
        if let (Some(p0), Some(p1), Some(p2)) = (rows[i - 1].phi, rows[i].phi, rows[i + 1].phi) {
            if (p1 - p0) * (p2 - p1) < 0.0 {
                critical_r.push(rows[i].r);
            }
        }
    }
    Ok(ReducedProfile { rows, critical_r })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub holds: bool,
    pub margin: f64,
    pub touch_t: Option<f64>,
}

/// Minimum over `t ∈ (a, 1)` of `q(t) = 4t² - (7a+1)t + 4a`.
pub fn two_bubble_certificate(a: f64) -> Result<Certificate> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::DomainError(format!("inner radius must lie in (0,1), got {a}")));
    }
    let q = |t: f64| 4.0 * t * t - (7.0 * a + 1.0) * t + 4.0 * a;
    let vertex = (7.0 * a + 1.0) / 8.0;
    let (t, margin) = if vertex > a && vertex < 1.0 {
        // q(vertex) = -(49a-1)(a-1)/16, free of cancellation
        (vertex, -(49.0 * a - 1.0) * (a - 1.0) / 16.0)
    } else if q(a) < q(1.0) {
        (a, q(a))
    } else {
        (1.0, q(1.0))
    };
    let holds = margin > 0.0;
    Ok(Certificate { holds, margin, touch_t: if holds { None } else { Some(t) } })
}

/// λ = 0 pair positivity `g₀(ζ₁) > G₀(ζ₁, ζ_j)` for every `j` and grid radius.
pub fn pair_positivity_lambda0(a: f64, k: usize) -> Result<bool> {
    let rows = radial_grid(a).par_iter().map(|&r| polygon_row(a, k, 0.0, r, SERIES_TOL)).collect::<Result<Vec<_>>>()?;
    Ok(rows.iter().all(|row| row.green.iter().all(|&g| row.robin * row.robin - g * g > 0.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub k: usize,
    /// Smallest `a` found with the predicate true (upper end of the bracket).
    pub threshold: Option<f64>,
    pub bracket: (f64, f64),
    pub verdict_lo: bool,
    pub verdict_hi: bool,
    pub sufficient_two_bubble_bound: f64,
}

/// The analyzer predicate at inner radius `a`.
pub fn threshold_predicate(a: f64, k: usize) -> Result<bool> {
    let l1 = lambda1(&DomainSpec::annulus(a)?);
    match find_lambda0(a, k, 1e-3 * l1) {
        Ok(_) => pair_positivity_lambda0(a, k),
        Err(Error::NoPositiveStart { .. }) | Err(Error::GridTooCoarse(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

pub fn a_threshold(k: usize, tol: f64) -> Result<ThresholdReport> {
    let (mut lo, mut hi) = (0.01, 0.95);
    let verdict_lo = threshold_predicate(lo, k)?;
    let verdict_hi = threshold_predicate(hi, k)?;
    let bound = 1.0 / 49.0;
    if verdict_lo || !verdict_hi {
        let threshold = if verdict_lo { Some(lo) } else { None };
        return Ok(ThresholdReport { k, threshold, bracket: (lo, hi), verdict_lo, verdict_hi, sufficient_two_bubble_bound: bound });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if threshold_predicate(mid, k)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdReport { k, threshold: Some(hi), bracket: (lo, hi), verdict_lo, verdict_hi, sufficient_two_bubble_bound: bound })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalityChecks {
    pub psi_zero: bool,
    pub psd: bool,
    pub radial_crit: bool,
    pub monotone_lambda: bool,
    pub lambda0_below_lambda_star: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalityReport {
    pub a: f64,
    pub k: usize,
    pub lambda1: f64,
    pub lambda0: f64,
    pub r0: f64,
    pub sigma1_at_crit: f64,
    pub sigma1_tolerance: f64,
    pub psi_at_crit: f64,
    pub eigenvalues_at_crit: Vec<f64>,
    pub d_sigma1_d_lambda: FdEstimate,
    pub d_sigma1_d_r: FdEstimate,
    pub radial_curvature: FdEstimate,
    pub max_d_sigma1_d_lambda_on_grid: f64,
    pub mu0_curve: Vec<(f64, f64)>,
    pub lambda_star: f64,
    pub other_minima: Vec<(f64, f64)>,
    pub checks: CriticalityChecks,
}

/// FD step in `r`: `1e-3 · thickness`.
fn radial_step(a: f64) -> f64 {
    1e-3 * (1.0 - a)
}

pub fn d_sigma1_d_lambda(a: f64, k: usize, lambda: f64, r: f64, h: f64) -> Result<FdEstimate> {
    richardson_central(|l| sigma1_polygon(a, k, l, r, SERIES_TOL), lambda, h)
}

/// Second central difference with one Richardson level.
fn second_derivative<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<FdEstimate> {
    let f0 = f(x)?;
    let d2 = |h: f64| -> Result<f64> { Ok((f(x + h)? - 2.0 * f0 + f(x - h)?) / (h * h)) };
    let coarse = d2(h)?;
    let fine = d2(0.5 * h)?;
    Ok(FdEstimate { value: (4.0 * fine - coarse) / 3.0, error: (fine - coarse).abs() / 3.0, step: h })
}

pub const MU0_EPSILONS: [f64; 7] = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1];

pub fn theorem1_report(a: f64, k: usize, tol: f64, consts: &EnergyConstants) -> Result<CriticalityReport> {
    let d = DomainSpec::annulus(a)?;
    let l1 = lambda1(&d);
    let crit = find_lambda0(a, k, tol)?;
    let (l0, r0) = (crit.lambda0, crit.r0);
    let cfg = PolygonConfig::new(k, r0, a)?;
    let m = build_matrix(&d, l0, &polygon_points(&cfg), SERIES_TOL)?;
    let psi_at_crit = psi(&m);
    let eig = eigen(&m)?;
    let hl = 1e-4 * l1;
    let dsl = d_sigma1_d_lambda(a, k, l0, r0, hl)?;
    // σ̃₁ changes by about |∂σ̃₁/∂λ|·tol within the λ-bisection bracket
    let sigma_tol = (dsl.value.abs() * tol).max(1e-9) * 10.0;
    let hr = radial_step(a);
    let dsr = richardson_central(|r| sigma1_polygon(a, k, l0, r, SERIES_TOL), r0, hr)?;
    let curv = second_derivative(|r| sigma1_polygon(a, k, l0, r, SERIES_TOL), r0, hr)?;
    let grid = radial_grid(a);
    let dl_grid = grid
        .par_iter()
        .map(|&r| Ok(d_sigma1_d_lambda(a, k, l0, r, hl)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let max_dl = dl_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mu0_curve = MU0_EPSILONS
        .iter()
        .filter(|&&e| l0 + e < l1)
        .map(|&e| Ok((e, mu0(a, k, l0 + e, r0, consts)?)))
        .collect::<Result<Vec<_>>>()?;
    let lambda_star = lambda_star_on_ray(a, tol)?;
    let psd_tol = 10.0 * sigma_tol;
    let checks = CriticalityChecks {
        psi_zero: crit.sigma1_at_crit.abs() <= sigma_tol,
        psd: eig.values[0] >= -psd_tol,
        radial_crit: dsr.value.abs() <= 10.0 * dsr.error + 1e-6 * curv.value.abs().max(1.0),
        monotone_lambda: max_dl < 0.0,
        lambda0_below_lambda_star: l0 < lambda_star,
    };
    Ok(CriticalityReport {
        a,
        k,
        lambda1: l1,
        lambda0: l0,
        r0,
        sigma1_at_crit: crit.sigma1_at_crit,
        sigma1_tolerance: sigma_tol,
        psi_at_crit,
        eigenvalues_at_crit: eig.values,
        d_sigma1_d_lambda: dsl,
        d_sigma1_d_r: dsr,
        radial_curvature: curv,
        max_d_sigma1_d_lambda_on_grid: max_dl,
        mu0_curve,
        lambda_star,
        other_minima: crit.other_minima,
        checks,
    })
}
