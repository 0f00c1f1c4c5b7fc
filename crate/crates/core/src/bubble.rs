//! Standard bubbles `w_{μ,ζ}`, their kernel derivatives, the radial corrector
//! `D0`, and the energy constants `a0..a3`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::{dist, sub, Point3};
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::special::ln_gamma;
use std::f64::consts::PI;

/// `3^{1/4}`, the normalisation making `U(z) = α3 (1+|z|²)^{-1/2}` solve `ΔU + U⁵ = 0`.
pub const ALPHA3: f64 = 1.316_074_012_952_492_5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BubbleParams {
    pub mu: f64,
    pub center: Point3,
}

impl BubbleParams {
    pub fn new(mu: f64, center: Point3) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::DomainError(format!("bubble rate mu must be positive, got {mu}")));
        }
        Ok(BubbleParams { mu, center })
    }
}

/// `w_{μ,ζ}(x) = α3 μ^{1/2} (μ² + |x-ζ|²)^{-1/2}`.
pub fn eval_bubble(p: &BubbleParams, x: &Point3) -> f64 {
    let rho = dist(x, &p.center);
    ALPHA3 * p.mu.sqrt() / (p.mu * p.mu + rho * rho).sqrt()
}

/// Closed-form Laplacian of the bubble, `-3 α3 μ^{5/2} (μ²+ρ²)^{-5/2}`.
pub fn bubble_laplacian(p: &BubbleParams, x: &Point3) -> f64 {
    let rho = dist(x, &p.center);
    let q = p.mu * p.mu + rho * rho;
    -3.0 * ALPHA3 * p.mu.powf(2.5) / q.powf(2.5)
}

/// The kernel functions: the three translation derivatives `∂_{ζ_j} w` and the
/// dilation derivative `∂_μ w`.
pub fn eval_bubble_kernels(p: &BubbleParams, x: &Point3) -> [f64; 4] {
    let d = sub(x, &p.center);
    let rho2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let mu = p.mu;
    let q = mu * mu + rho2;
    let q32 = q * q.sqrt();
    let c = ALPHA3 * mu.sqrt() / q32;
    [
        c * d[0],
        c * d[1],
        c * d[2],
        ALPHA3 * (rho2 - mu * mu) / (2.0 * mu.sqrt() * q32),
    ]
}

/// One energy constant, evaluated both in closed form and by quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantPair {
    pub closed_form: f64,
    pub quadrature: f64,
    pub quadrature_error: f64,
}

impl ConstantPair {
    pub fn relative_error(&self) -> f64 {
        ((self.quadrature - self.closed_form) / self.closed_form).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyConstants {
    pub a0: ConstantPair,
    pub a1: ConstantPair,
    pub a2: ConstantPair,
    pub a3: ConstantPair,
}

impl EnergyConstants {
    /// Closed forms only (no quadrature); used where the constants are inputs.
    pub fn closed_forms() -> Self {
        let (a0, a1, a2, a3) = closed_form_constants();
        let pair = |c: f64| ConstantPair { closed_form: c, quadrature: c, quadrature_error: 0.0 };
        EnergyConstants { a0: pair(a0), a1: pair(a1), a2: pair(a2), a3: pair(a3) }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.a0.closed_form, self.a1.closed_form, self.a2.closed_form, self.a3.closed_form]
    }
}

/// `((α3π)²/4, 8(α3π)², (α3π)², 120(α3π²)²)`.
pub fn closed_form_constants() -> (f64, f64, f64, f64) {
    let s = ALPHA3 * ALPHA3; // √3
    (s * PI * PI / 4.0, 8.0 * s * PI * PI, s * PI * PI, 120.0 * s * PI.powi(4))
}

/// `U(r)` for the standard bubble.
fn standard_bubble(r: f64) -> f64 {
    ALPHA3 / (1.0 + r * r).sqrt()
}

/// `∫_{R³} f(|z|) dz = 4π ∫_0^∞ r² f(r) dr` for a radial integrand whose
/// radial density `r² f(r)` decays like `r^{-decay}`.
pub fn radial_integral_r3<F: Fn(f64) -> f64>(f: F, decay: f64, tol: f64) -> Result<(f64, f64)> {
    let q = integrate_to_infinity(|r| 4.0 * PI * r * r * f(r), 0.0, decay, tol)?;
    Ok((q.value, q.error))
}

/// Evaluate the four defining integrals by radial quadrature and pair them with
/// the closed forms. `tol` is a relative tolerance.
pub fn compute_constants(tol: f64) -> Result<EnergyConstants> {
    if !(tol > 0.0) {
        return Err(Error::DomainError("tolerance must be positive".into()));
    }
    let (c0, c1, c2, c3) = closed_form_constants();
    let abs = |c: f64| tol * c * 0.1;

    let (i6, e6) = radial_integral_r3(|r| standard_bubble(r).powi(6), 4.0, abs(c0) * 3.0)?;
    let (i5, e5) = radial_integral_r3(|r| standard_bubble(r).powi(5), 3.0, abs(c1) / (2.0 * PI * ALPHA3))?;
    let (i4, e4) = radial_integral_r3(
        |r| standard_bubble(r).powi(4),
        2.0,
        abs(c3) / (2.5 * (4.0 * PI * ALPHA3).powi(2)),
    )?;
    // a2 integrand; 1/r - 1/√(1+r²) rewritten to avoid cancellation
    let a2_density = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let s = (1.0 + r * r).sqrt();
        let gap = 1.0 / (r * s * (r + s));
        let u = standard_bubble(r);
        0.5 * ALPHA3 * (gap * u + 0.5 * r * u.powi(5))
    };
    let (i2, e2) = radial_integral_r3(a2_density, 2.0, abs(c2))?;

    Ok(EnergyConstants {
        a0: ConstantPair { closed_form: c0, quadrature: i6 / 3.0, quadrature_error: e6 / 3.0 },
        a1: ConstantPair {
            closed_form: c1,
            quadrature: 2.0 * PI * ALPHA3 * i5,
            quadrature_error: 2.0 * PI * ALPHA3 * e5,
        },
        a2: ConstantPair { closed_form: c2, quadrature: i2, quadrature_error: e2 },
        a3: ConstantPair {
            closed_form: c3,
            quadrature: 2.5 * (4.0 * PI * ALPHA3).powi(2) * i4,
            quadrature_error: 2.5 * (4.0 * PI * ALPHA3).powi(2) * e4,
        },
    })
}

/// `∫_0^∞ (r/(1+r²))^q r^{-α-1} dr` by quadrature, with the Gamma closed form
/// `Γ((q-α)/2) Γ((q+α)/2) / (2Γ(q))`.
pub fn beta_integral_check(q: f64, alpha: f64) -> Result<(f64, f64)> {
    let lo = q - alpha;
    let hi = q + alpha;
    if !(lo > 0.0 && hi > 0.0) {
        return Err(Error::DomainError(format!(
            "integral diverges unless q-α>0 and q+α>0 (q={q}, α={alpha})"
        )));
    }
    let closed = 0.5 * (ln_gamma(lo / 2.0) + ln_gamma(hi / 2.0) - ln_gamma(q)).exp();
    // r = e^t turns both ends into exponential decay
    let tol = 1e-14 * closed;
    let t_lo = -((10.0 / (tol * lo)).ln() / lo).max(1.0);
    let t_hi = ((10.0 / (tol * hi)).ln() / hi).max(1.0);
    let f = |t: f64| {
        let r = t.exp();
        let base = r / (1.0 + r * r);
        (q * base.ln() - alpha * t).exp()
    };
    let mut sum = 0.0;
    let mut a = t_lo;
    while a < t_hi {
        let b = (a + 2.0).min(t_hi);
        sum += integrate(f, a, b, tol * 1e-2, 1e-15)?.value;
        a = b;
    }
    Ok((sum, closed))
}

/// `(2/(λα3)) ∫_0^s t² f(t) dt = asinh(s) - s/(s+√(1+s²))`, with `f` the
/// right-hand side of the corrector equation.
fn corrector_flux(s: f64) -> f64 {
    if s < 1e-3 {
        let s2 = s * s;
        s2 * (1.0 - 2.0 * s / 3.0 + s2 * s / 5.0 - 3.0 * s2 * s2 * s / 28.0)
    } else {
        s.asinh() - s / (s + (1.0 + s * s).sqrt())
    }
}

/// Radial corrector: decaying solution of `u'' + (2/ρ)u' = -λα3((1+ρ²)^{-1/2} - ρ^{-1})`,
/// evaluated through `u(ρ) = -∫_ρ^∞ s^{-2} ∫_0^s t² f(t) dt ds` by quadrature.
pub fn compute_d0(rho: f64, lambda: f64) -> Result<f64> {
    if !(rho >= 0.0) || !(lambda > 0.0) {
        return Err(Error::DomainError(format!("compute_d0 needs rho>=0, lambda>0 (rho={rho}, lambda={lambda})")));
    }
    let c = 0.5 * lambda * ALPHA3;
    // s^{-2} × flux ~ ln(2s)/s² : decay exponent 1.5 bounds the log factor
    let integrand = |s: f64| {
        if s == 0.0 {
            1.0
        } else {
            corrector_flux(s) / (s * s)
        }
    };
    let q = integrate_to_infinity(integrand, rho, 1.5, 1e-13)?;
    Ok(-c * q.value)
}

/// Closed form of the same corrector:
/// `D0(ρ) = -(λα3/2) (√(1+ρ²) - ρ + asinh(ρ)/ρ)`.
pub fn d0_closed_form(rho: f64, lambda: f64) -> f64 {
    let tail = 1.0 / ((1.0 + rho * rho).sqrt() + rho);
    let ash = if rho < 1e-4 { 1.0 - rho * rho / 6.0 } else { rho.asinh() / rho };
    -0.5 * lambda * ALPHA3 * (tail + ash)
}
