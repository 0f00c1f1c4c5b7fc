//! Dirichlet Green function of `-Δ-λ` on the unit ball and on annuli
//! `a < |x| < 1`, by Legendre-mode expansion of the regular part.
//!
//! The engine subtracts the oscillatory free kernel `cos(k|z|)/(4π|z|)`
//! (`k = √λ`) rather than the Newtonian kernel, so the remainder
//! `H̃(x,y)` is a smooth interior Helmholtz solution
//!
//! ```text
//! H̃(x,y) = (1/4π) Σ_l h_l(|x|) P_l(cos γ),   h_l(r) = A_l p_l(r) + B_l q_l(r)
//! ```
//!
//! with `(p_l, q_l) = (j_l(kr), y_l(kr))` for `λ > 0` and `(r^l, r^{-l-1})` for
//! `λ = 0`. All radial products are carried as [`Scaled`] numbers.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::point::{cos_angle, dist, norm, Point3};
use crate::special::{spherical_jn_scaled, spherical_yn_scaled, CompensatedSum, Scaled};

/// Truncation orders above this are refused.
pub const MAX_ORDER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    UnitBall,
    Annulus { a: f64 },
}

impl DomainSpec {
    pub fn annulus(a: f64) -> Result<Self> {
        let d = DomainSpec::Annulus { a };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DomainSpec::UnitBall => Ok(()),
            DomainSpec::Annulus { a } if a > 0.0 && a < 1.0 => Ok(()),
            DomainSpec::Annulus { a } => Err(Error::DomainError(format!("annulus inner radius must lie in (0,1), got {a}"))),
        }
    }

    pub fn inner_radius(&self) -> f64 {
        match *self {
            DomainSpec::UnitBall => 0.0,
            DomainSpec::Annulus { a } => a,
        }
    }

    pub fn thickness(&self) -> f64 {
        1.0 - self.inner_radius()
    }

    pub fn contains(&self, x: &Point3) -> bool {
        let r = norm(x);
        match *self {
            DomainSpec::UnitBall => r < 1.0,
            DomainSpec::Annulus { a } => r > a && r < 1.0,
        }
    }

    /// Distance to the boundary (negative outside).
    pub fn boundary_distance(&self, x: &Point3) -> f64 {
        let r = norm(x);
        match *self {
            DomainSpec::UnitBall => 1.0 - r,
            DomainSpec::Annulus { a } => (1.0 - r).min(r - a),
        }
    }

    /// Worst geometric ratio of the mode series over targets in the domain for
    /// a source at radius `s`.
    fn max_ratio(&self, s: f64) -> f64 {
        match *self {
            DomainSpec::UnitBall => s,
            DomainSpec::Annulus { a } => s.max(a / s),
        }
    }

    /// Geometric ratio of the mode series between radii `r` and `s`.
    fn ratio(&self, r: f64, s: f64) -> f64 {
        match *self {
            DomainSpec::UnitBall => r * s,
            DomainSpec::Annulus { a } => (r * s).max(a * a / (r * s)),
        }
    }
}

/// First Dirichlet eigenvalue: `π²` for the ball, `π²/(1-a)²` for the annulus
/// (root of the radial mode `sin(√λ(r-a))/r`).
pub fn lambda1(d: &DomainSpec) -> f64 {
    PI * PI / (d.thickness() * d.thickness())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenEval {
    pub value: f64,
    pub truncation_order: usize,
    pub tail_bound: f64,
}

fn check_lambda(d: &DomainSpec, lambda: f64) -> Result<()> {
    d.validate()?;
    if !(lambda >= 0.0 && lambda < lambda1(d)) {
        return Err(Error::DomainError(format!(
            "lambda must lie in [0, lambda1 = {}), got {lambda}",
            lambda1(d)
        )));
    }
    Ok(())
}

fn check_point(d: &DomainSpec, x: &Point3) -> Result<()> {
    if !d.contains(x) {
        return Err(Error::OutsideDomain(*x));
    }
    Ok(())
}

/// Truncation order predicted for geometric ratio `rho` and wavenumber `k`.
pub fn predicted_order(rho: f64, k: f64, tol: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let geometric = ((tol * (1.0 - rho)).ln() / rho.ln()).max(0.0);
    geometric + 2.0 * k.ceil() + 10.0
}

fn order_for(rho: f64, k: f64, tol: f64) -> Result<usize> {
    if rho >= 1.0 {
        return Err(Error::PointsTooCloseToBoundary { ratio: rho, predicted_order: f64::INFINITY });
    }
    let l = predicted_order(rho, k, tol);
    if l > MAX_ORDER as f64 {
        return Err(Error::PointsTooCloseToBoundary { ratio: rho, predicted_order: l });
    }
    Ok(if rho == 0.0 { 0 } else { l.ceil() as usize })
}

/// Radial solutions `p_l(r)` for `l = 0..=lmax`.
fn regular_radial(lmax: usize, k: f64, r: f64) -> Vec<Scaled> {
    if k == 0.0 {
        let mut out = Vec::with_capacity(lmax + 1);
        let base = Scaled::new(r);
        let mut cur = Scaled::new(1.0);
        for _ in 0..=lmax {
            out.push(cur);
            cur = cur.mul(base);
        }
        out
    } else {
        spherical_jn_scaled(lmax, k * r)
    }
}

/// Radial solutions `q_l(r)` for `l = 0..=lmax`; `r > 0`.
fn singular_radial(lmax: usize, k: f64, r: f64) -> Vec<Scaled> {
    if k == 0.0 {
        let mut out = Vec::with_capacity(lmax + 1);
        let inv = Scaled::new(1.0 / r);
        let mut cur = inv;
        for _ in 0..=lmax {
            out.push(cur);
            cur = cur.mul(inv);
        }
        out
    } else {
        spherical_yn_scaled(lmax, k * r)
    }
}

fn kappa(l: usize, k: f64) -> Scaled {
    if k == 0.0 {
        Scaled::new(1.0)
    } else {
        Scaled::new(-k * (2 * l + 1) as f64)
    }
}

/// Mode coefficients of `H̃(·, y)` for a fixed source radius `s = |y|`,
/// precomputed up to a fixed order. Evaluation at any target radius reuses them.
#[derive(Clone, Debug)]
pub struct ModeKernel {
    domain: DomainSpec,
    k: f64,
    source_radius: f64,
    lmax: usize,
    coef_p: Vec<Scaled>,
    coef_q: Vec<Scaled>,
}

/// `Σ_l c_l P_l(t)` for a set of target-radius coefficients (already divided by 4π).
#[derive(Clone, Debug)]
pub struct RadialCoefficients {
    pub coeffs: Vec<f64>,
    pub tail_bound: f64,
}

impl RadialCoefficients {
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn sum(&self, t: f64) -> f64 {
        legendre_series(&self.coeffs, t)
    }
}

/// `Σ c_l P_l(t)` with Legendre values generated by the three-term recurrence.
pub fn legendre_series(coeffs: &[f64], t: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    let (mut p_prev, mut p) = (1.0, t);
    for (l, &c) in coeffs.iter().enumerate() {
        let pl = match l {
            0 => 1.0,
            1 => t,
            _ => {
                let lf = (l - 1) as f64;
                let next = ((2.0 * lf + 1.0) * t * p - lf * p_prev) / (lf + 1.0);
                p_prev = p;
                p = next;
                next
            }
        };
        acc.add(c * pl);
    }
    acc.value()
}

impl ModeKernel {
    /// Kernel for source radius `s`, with enough modes for every target in the
    /// domain at tolerance `tol`.
    pub fn new(d: &DomainSpec, lambda: f64, s: f64, tol: f64) -> Result<Self> {
        check_lambda(d, lambda)?;
        let k = lambda.sqrt();
        let lmax = order_for(d.max_ratio(s), k, tol)?;
        Self::with_order(d, lambda, s, lmax)
    }

    /// Kernel sized for targets at radius `r` only.
    pub fn for_target_radius(d: &DomainSpec, lambda: f64, s: f64, r: f64, tol: f64) -> Result<Self> {
        check_lambda(d, lambda)?;
        let k = lambda.sqrt();
        let lmax = order_for(d.ratio(r, s), k, tol)?;
        Self::with_order(d, lambda, s, lmax)
    }

    pub fn with_order(d: &DomainSpec, lambda: f64, s: f64, lmax: usize) -> Result<Self> {
        check_lambda(d, lambda)?;
        let k = lambda.sqrt();
        let ps = regular_radial(lmax, k, s);
        let p1 = regular_radial(lmax, k, 1.0);
        let q1 = singular_radial(lmax, k, 1.0);
        let mut coef_p = Vec::with_capacity(lmax + 1);
        let mut coef_q = Vec::new();
        match *d {
            DomainSpec::UnitBall => {
                for l in 0..=lmax {
                    if p1[l].is_zero() {
                        return Err(Error::ResonantMode { l });
                    }
                    coef_p.push(kappa(l, k).mul(ps[l]).mul(q1[l]).div(p1[l]));
                }
            }
            DomainSpec::Annulus { a } => {
                let qs = singular_radial(lmax, k, s);
                let pa = regular_radial(lmax, k, a);
                let qa = singular_radial(lmax, k, a);
                coef_q.reserve(lmax + 1);
                for l in 0..=lmax {
                    let det = pa[l].mul(q1[l]).sub(qa[l].mul(p1[l]));
                    if det.is_zero() {
                        return Err(Error::ResonantMode { l });
                    }
                    let kp = kappa(l, k);
                    let inner = pa[l].mul(qs[l]).sub(ps[l].mul(qa[l]));
                    coef_p.push(kp.mul(q1[l]).mul(inner).div(det));
                    let outer = ps[l].mul(q1[l]).sub(qs[l].mul(p1[l]));
                    coef_q.push(kp.mul(pa[l]).mul(outer).div(det));
                }
            }
        }
        Ok(ModeKernel { domain: *d, k, source_radius: s, lmax, coef_p, coef_q })
    }

    pub fn order(&self) -> usize {
        self.lmax
    }

    pub fn source_radius(&self) -> f64 {
        self.source_radius
    }

    /// Coefficients `h_l(r)/(4π)`, truncated at the order the tolerance needs.
    pub fn radial_coefficients(&self, r: f64, tol: f64) -> Result<RadialCoefficients> {
        let rho = self.domain.ratio(r, self.source_radius);
        let want = order_for(rho, self.k, tol)?;
        if want > self.lmax {
            return Err(Error::PointsTooCloseToBoundary { ratio: rho, predicted_order: want as f64 });
        }
        let p = regular_radial(want, self.k, r);
        let q = if self.coef_q.is_empty() { Vec::new() } else { singular_radial(want, self.k, r) };
        let mut coeffs = Vec::with_capacity(want + 1);
        for l in 0..=want {
            let mut h = self.coef_p[l].mul(p[l]);
            if !q.is_empty() {
                h = h.add(self.coef_q[l].mul(q[l]));
            }
            coeffs.push(h.to_f64() / (4.0 * PI));
        }
        let last = coeffs.last().map_or(0.0, |c| c.abs());
        let prev = if want >= 1 { coeffs[want - 1].abs() * rho } else { 0.0 };
        let tail_bound = if rho == 0.0 { 0.0 } else { 2.0 * last.max(prev) * rho / (1.0 - rho) };
        if tail_bound > tol {
            return Err(Error::PointsTooCloseToBoundary { ratio: rho, predicted_order: want as f64 });
        }
        Ok(RadialCoefficients { coeffs, tail_bound })
    }

    /// `H̃(x, y)` for a source `y` at this kernel's radius.
    pub fn smooth_part(&self, x: &Point3, y: &Point3, tol: f64) -> Result<GreenEval> {
        let rc = self.radial_coefficients(norm(x), tol)?;
        Ok(GreenEval { value: rc.sum(cos_angle(x, y)), truncation_order: rc.order(), tail_bound: rc.tail_bound })
    }
}

/// `cos(k d)/(4π d)`.
pub fn free_kernel(lambda: f64, d: f64) -> f64 {
    (lambda.sqrt() * d).cos() / (4.0 * PI * d)
}

/// `(1 - cos(k d))/(4π d) = 2 sin²(kd/2)/(4π d)`, zero at `d = 0`.
pub fn newton_minus_free(lambda: f64, d: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let s = (0.5 * lambda.sqrt() * d).sin();
    2.0 * s * s / (4.0 * PI * d)
}

/// `G_λ(x, y)`.
pub fn green(d: &DomainSpec, lambda: f64, x: &Point3, y: &Point3, tol: f64) -> Result<GreenEval> {
    check_lambda(d, lambda)?;
    check_point(d, x)?;
    check_point(d, y)?;
    let dxy = dist(x, y);
    if dxy <= 1e-14 {
        return Err(Error::CoincidentPoints);
    }
    let kernel = ModeKernel::for_target_radius(d, lambda, norm(y), norm(x), tol)?;
    let h = kernel.smooth_part(x, y, tol)?;
    Ok(GreenEval { value: free_kernel(lambda, dxy) - h.value, ..h })
}

/// `H_λ(x, y) = Γ(y-x) - G_λ(x, y)`; at `x = y` this is the pure mode series.
pub fn regular_part(d: &DomainSpec, lambda: f64, x: &Point3, y: &Point3, tol: f64) -> Result<GreenEval> {
    check_lambda(d, lambda)?;
    check_point(d, x)?;
    check_point(d, y)?;
    let kernel = ModeKernel::for_target_radius(d, lambda, norm(y), norm(x), tol)?;
    let h = kernel.smooth_part(x, y, tol)?;
    Ok(GreenEval { value: newton_minus_free(lambda, dist(x, y)) + h.value, ..h })
}

/// Robin function `g_λ(x) = H_λ(x, x)`.
pub fn robin(d: &DomainSpec, lambda: f64, x: &Point3, tol: f64) -> Result<GreenEval> {
    regular_part(d, lambda, x, x, tol)
}

/// One term of the printed λ = 0 annulus series,
/// `P_m = (a^{2m+1} - 2a^{2m+1}t^{2m+1} + t^{2(2m+1)}) / ((2m+1) t^{2(m+1)} (1 - a^{2m+1}))`.
pub fn series_term(a: f64, t: f64, m: usize) -> f64 {
    let n = (2 * m + 1) as i32;
    let an = a.powi(n);
    let tn = t.powi(n);
    let ratio = (a / t).powi(n);
    // split as (a/t)^n (1 - t^n) + t^n (1 - (a/t)^n), each over n t (1 - a^n)
    (ratio * (1.0 - tn) + tn * (1.0 - ratio)) / (n as f64 * t * (1.0 - an))
}

/// How the λ = 0 series weights its terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesWeighting {
    /// `Σ P_m`, exactly as printed.
    Printed,
    /// `Σ (2m+1) P_m`, the Legendre-mode coefficients of the regular part.
    ModeWeighted,
}

impl SeriesWeighting {
    fn weight(self, m: usize) -> f64 {
        match self {
            SeriesWeighting::Printed => 1.0,
            SeriesWeighting::ModeWeighted => (2 * m + 1) as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesEval {
    pub value: f64,
    pub terms: usize,
    pub tail_bound: f64,
    pub omega2: f64,
}

fn series_sum(a: f64, x: &Point3, tol: f64, alternating: bool, weighting: SeriesWeighting) -> Result<(f64, usize, f64)> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::DomainError(format!("annulus inner radius must lie in (0,1), got {a}")));
    }
    let t = norm(x);
    if !(t > a && t < 1.0) {
        return Err(Error::SeriesNotConverging(format!("|x| = {t} outside ({a}, 1)")));
    }
    let rho = (t * t).max(a * a / (t * t));
    let mut acc = CompensatedSum::new();
    let mut m = 0usize;
    loop {
        let term = weighting.weight(m) * series_term(a, t, m);
        let sign = if alternating && m % 2 == 1 { -1.0 } else { 1.0 };
        acc.add(sign * term);
        m += 1;
        let bound = 2.0 * term * rho / (1.0 - rho);
        if bound < tol {
            return Ok((acc.value(), m, bound));
        }
        if m > 50 * MAX_ORDER {
            return Err(Error::SeriesNotConverging(format!("no convergence after {m} terms")));
        }
    }
}

/// `g_0(x) = (1/ω₂) Σ_m w_m P_m(x)` on the annulus.
pub fn annulus_g0_series(a: f64, x: &Point3, tol: f64, omega2: f64, weighting: SeriesWeighting) -> Result<SeriesEval> {
    let (s, terms, tail) = series_sum(a, x, tol, false, weighting)?;
    Ok(SeriesEval { value: s / omega2, terms, tail_bound: tail / omega2, omega2 })
}

/// `G_0(x,-x) = (1/ω₂) [1/(2|x|) - Σ_m (-1)^m w_m P_m(x)]` on the annulus.
pub fn annulus_g0_antipodal(a: f64, x: &Point3, tol: f64, omega2: f64, weighting: SeriesWeighting) -> Result<SeriesEval> {
    let (s, terms, tail) = series_sum(a, x, tol, true, weighting)?;
    let t = norm(x);
    Ok(SeriesEval { value: (0.5 / t - s) / omega2, terms, tail_bound: tail / omega2, omega2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Omega2Calibration {
    pub a: f64,
    pub reference_radius: f64,
    pub omega2: f64,
    pub relative_deviation_from_4pi: f64,
    pub weighting: SeriesWeighting,
}

/// Fix `ω₂` by matching the unnormalised series to the λ = 0 mode engine at one
/// reference point.
pub fn calibrate_omega2(a: f64, reference_radius: f64, tol: f64, weighting: SeriesWeighting) -> Result<Omega2Calibration> {
    let x = [reference_radius, 0.0, 0.0];
    let raw = annulus_g0_series(a, &x, tol, 1.0, weighting)?.value;
    let engine = robin(&DomainSpec::annulus(a)?, 0.0, &x, tol)?.value;
    let omega2 = raw / engine;
    Ok(Omega2Calibration {
        a,
        reference_radius,
        omega2,
        relative_deviation_from_4pi: (omega2 - 4.0 * PI).abs() / (4.0 * PI),
        weighting,
    })
}

/// A finite-difference derivative with its step and error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FdEstimate {
    pub value: f64,
    pub error: f64,
    pub step: f64,
}

/// Central difference in `λ` with one Richardson level:
/// `(4 D(h/2) - D(h)) / 3`, error `|D(h/2) - D(h)| / 3`.
pub fn richardson_central<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<FdEstimate> {
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok(FdEstimate { value: (4.0 * fine - coarse) / 3.0, error: (fine - coarse).abs() / 3.0, step: h })
}

/// Which quantity to differentiate in `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaTarget {
    Robin(Point3),
    Green(Point3, Point3),
}

/// `∂/∂λ` of the Robin or Green function; `h = None` uses `1e-4 λ₁`.
pub fn d_lambda(d: &DomainSpec, target: LambdaTarget, lambda: f64, h: Option<f64>, tol: f64) -> Result<FdEstimate> {
    let l1 = lambda1(d);
    let h = h.unwrap_or(1e-4 * l1);
    if !(h > 0.0) || lambda - h <= 0.0 || lambda + h >= l1 {
        return Err(Error::StepOutOfRange(format!("lambda ± h = {lambda} ± {h} leaves (0, {l1})")));
    }
    richardson_central(
        |l| match target {
            LambdaTarget::Robin(x) => Ok(robin(d, l, &x, tol)?.value),
            LambdaTarget::Green(x, y) => Ok(green(d, l, &x, &y, tol)?.value),
        },
        lambda,
        h,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball_center_robin(lambda: f64) -> f64 {
        let k = lambda.sqrt();
        k / k.tan() / (4.0 * PI)
    }

    #[test]
    fn first_eigenvalues() {
        assert!((lambda1(&DomainSpec::UnitBall) - PI * PI).abs() < 1e-15);
        assert!((lambda1(&DomainSpec::annulus(0.5).unwrap()) - 4.0 * PI * PI).abs() < 1e-12);
        assert!((lambda1(&DomainSpec::annulus(0.9).unwrap()) - PI * PI / 0.01).abs() < 1e-8);
        assert!(DomainSpec::annulus(1.0).is_err());
    }

    #[test]
    fn ball_center_values() {
        let b = DomainSpec::UnitBall;
        let g = green(&b, 1e-12, &[0.0; 3], &[0.5, 0.0, 0.0], 1e-13).unwrap();
        assert!((g.value - 1.0 / (4.0 * PI)).abs() < 1e-9);
        let g = green(&b, PI * PI / 4.0, &[0.0; 3], &[0.0, 0.5, 0.0], 1e-13).unwrap();
        assert!((g.value - 0.112_539_54).abs() < 1e-8, "{}", g.value);
        for &l in &[0.5, 1.0, 2.0, 2.4, 9.0] {
            let v = robin(&b, l, &[0.0; 3], 1e-13).unwrap().value;
            assert!((v - ball_center_robin(l)).abs() < 1e-9, "lambda={l}");
        }
        assert!(robin(&b, PI * PI / 4.0, &[0.0; 3], 1e-13).unwrap().value.abs() < 1e-8);
        assert!((robin(&b, 1e-8, &[0.0; 3], 1e-13).unwrap().value - 1.0 / (4.0 * PI)).abs() < 1e-6);
    }

    #[test]
    fn ball_laplace_image_formula() {
        // H_0(x, y) = 1/(4π | |y| x - y/|y| |) on the unit ball
        let b = DomainSpec::UnitBall;
        let x = [0.3, -0.2, 0.1];
        let y = [-0.1, 0.45, 0.2];
        let ny = norm(&y);
        let img = [ny * x[0] - y[0] / ny, ny * x[1] - y[1] / ny, ny * x[2] - y[2] / ny];
        let exact = 1.0 / (4.0 * PI * norm(&img));
        let h = regular_part(&b, 0.0, &x, &y, 1e-14).unwrap().value;
        assert!((h - exact).abs() < 1e-13, "{h} vs {exact}");
        let g = robin(&b, 0.0, &[0.6, 0.0, 0.0], 1e-14).unwrap().value;
        assert!((g - 1.0 / (4.0 * PI * 0.64)).abs() < 1e-13);
    }

    #[test]
    fn regular_part_consistency() {
        let d = DomainSpec::annulus(0.4).unwrap();
        let x = [0.5, 0.2, 0.1];
        let y = [-0.3, 0.6, 0.0];
        let lam = 7.0;
        let g = green(&d, lam, &x, &y, 1e-13).unwrap().value;
        let h = regular_part(&d, lam, &x, &y, 1e-13).unwrap().value;
        assert!((h - (1.0 / (4.0 * PI * dist(&x, &y)) - g)).abs() < 1e-12);
    }

    #[test]
    fn green_symmetry_and_positivity() {
        for d in [DomainSpec::UnitBall, DomainSpec::annulus(0.3).unwrap(), DomainSpec::annulus(0.7).unwrap()] {
            let l1 = lambda1(&d);
            let a = d.inner_radius();
            let pts = [[a + 0.2 * (1.0 - a), 0.0, 0.0], [0.0, a + 0.6 * (1.0 - a), 0.05], [-0.3 * (a + 0.5), -0.6 * (a + 0.5) * 0.8, 0.1]];
            for &lam in &[0.0, 0.3 * l1, 0.9 * l1] {
                for i in 0..3 {
                    for j in 0..3 {
                        if i == j || !d.contains(&pts[i]) || !d.contains(&pts[j]) {
                            continue;
                        }
                        let gij = green(&d, lam, &pts[i], &pts[j], 1e-13).unwrap().value;
                        let gji = green(&d, lam, &pts[j], &pts[i], 1e-13).unwrap().value;
                        assert!(gij > 0.0);
                        assert!((gij - gji).abs() <= 1e-10 * gij.abs(), "{d:?} {lam} {gij} {gji}");
                    }
                }
            }
        }
    }

    #[test]
    fn errors_reported() {
        let b = DomainSpec::UnitBall;
        let x = [0.2, 0.0, 0.0];
        assert!(matches!(green(&b, 1.0, &x, &x, 1e-12), Err(Error::CoincidentPoints)));
        assert!(matches!(robin(&b, 1.0, &[1.2, 0.0, 0.0], 1e-12), Err(Error::OutsideDomain(_))));
        assert!(robin(&b, 10.0, &x, 1e-12).is_err());
        assert!(matches!(
            robin(&b, 1.0, &[0.999_999, 0.0, 0.0], 1e-12),
            Err(Error::PointsTooCloseToBoundary { .. })
        ));
    }

    #[test]
    fn robin_blows_up_at_boundary() {
        let d = DomainSpec::annulus(0.5).unwrap();
        let mut prev = 0.0;
        for &r in &[0.9, 0.95, 0.98, 0.99] {
            let v = robin(&d, 5.0, &[r, 0.0, 0.0], 1e-12).unwrap().value;
            assert!(v > prev);
            prev = v;
        }
        let mut prev = 0.0;
        for &r in &[0.6, 0.55, 0.52, 0.51] {
            let v = robin(&d, 5.0, &[0.0, r, 0.0], 1e-12).unwrap().value;
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn truncation_is_stable_under_doubling() {
        let d = DomainSpec::annulus(0.6).unwrap();
        let lam = 20.0;
        let s = 0.75;
        let tol = 1e-12;
        let x = [0.3, 0.7 * 0.8, 0.1];
        let y = [s, 0.0, 0.0];
        let k1 = ModeKernel::for_target_radius(&d, lam, s, norm(&x), tol).unwrap();
        let v1 = k1.smooth_part(&x, &y, tol).unwrap().value;
        let k2 = ModeKernel::with_order(&d, lam, s, 2 * k1.order()).unwrap();
        let rc = k2.radial_coefficients(norm(&x), tol).unwrap();
        let full = {
            let p = regular_radial(2 * k1.order(), lam.sqrt(), norm(&x));
            let q = singular_radial(2 * k1.order(), lam.sqrt(), norm(&x));
            let c: Vec<f64> = (0..=2 * k1.order())
                .map(|l| k2.coef_p[l].mul(p[l]).add(k2.coef_q[l].mul(q[l])).to_f64() / (4.0 * PI))
                .collect();
            legendre_series(&c, cos_angle(&x, &y))
        };
        assert!(rc.order() <= k1.order());
        assert!((v1 - full).abs() < tol, "{v1} vs {full}");
    }

    #[test]
    fn d_lambda_ball_center() {
        let b = DomainSpec::UnitBall;
        let fd = d_lambda(&b, LambdaTarget::Robin([0.0; 3]), 1.0, None, 1e-13).unwrap();
        let k: f64 = 1.0;
        let exact = (1.0 / k.tan() / (2.0 * k) - 1.0 / (2.0 * k.sin().powi(2))) / (4.0 * PI);
        assert!((fd.value - exact).abs() < 1e-7, "{} vs {exact}", fd.value);
        assert!(d_lambda(&b, LambdaTarget::Robin([0.0; 3]), 1e-5, None, 1e-13).is_err());
        let g = d_lambda(&b, LambdaTarget::Green([0.1, 0.0, 0.0], [0.0, 0.4, 0.0]), 3.0, None, 1e-13).unwrap();
        assert!(g.value > 0.0);
    }

    #[test]
    fn series_term_examples() {
        assert!((series_term(0.5, 0.75, 0) - 1.111_111_111_111).abs() < 1e-12);
        for m in 0..40 {
            for &t in &[0.51, 0.7, 0.99] {
                assert!(series_term(0.5, t, m) >= 0.0);
            }
        }
        assert!(matches!(
            annulus_g0_series(0.5, &[0.4, 0.0, 0.0], 1e-12, 4.0 * PI, SeriesWeighting::Printed),
            Err(Error::SeriesNotConverging(_))
        ));
        assert!(series_term(0.5, 0.7, 5000).is_finite());
    }

    #[test]
    fn mode_weighted_series_matches_engine() {
        let d = DomainSpec::annulus(0.5).unwrap();
        for &t in &[0.55, 0.75, 0.95] {
            let x = [0.0, t, 0.0];
            let w = SeriesWeighting::ModeWeighted;
            let g = annulus_g0_series(0.5, &x, 1e-14, 4.0 * PI, w).unwrap().value;
            let e = robin(&d, 0.0, &x, 1e-13).unwrap().value;
            assert!((g - e).abs() < 1e-11, "{g} vs {e}");
            let ga = annulus_g0_antipodal(0.5, &x, 1e-14, 4.0 * PI, w).unwrap().value;
            let ge = green(&d, 0.0, &x, &[0.0, -t, 0.0], 1e-13).unwrap().value;
            assert!((ga - ge).abs() < 1e-11, "{ga} vs {ge}");
        }
        let cal = calibrate_omega2(0.5, 0.75, 1e-14, SeriesWeighting::ModeWeighted).unwrap();
        assert!(cal.relative_deviation_from_4pi < 1e-11);
    }
}
