//! Adaptive Gauss–Kronrod quadrature on finite intervals and on half-lines
//! with power-law decay.

use crate::error::{Error, Result};
use crate::special::CompensatedSum;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_k = kron.abs();
    let mut fv = [0.0; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        kron += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = kron * 0.5;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let value = kron * h;
    let res_asc = asc * h.abs();
    let res_abs = abs_k * h.abs();
    let mut err = ((kron - gauss) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel { a, b, value, error: err, abs_value: res_abs }
}

/// Adaptive bisection with global error control: stops when the summed error
/// estimate is below `max(tol_abs, tol_rel*|I|)`, or at the roundoff floor.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol_abs: f64,
    tol_rel: f64,
) -> Result<QuadResult> {
    integrate_with_limit(f, a, b, tol_abs, tol_rel, 2000)
}

pub fn integrate_with_limit<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol_abs: f64,
    tol_rel: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let mut panels = vec![gk15(&f, a, b)];
    let mut evals = 15;
    loop {
        let total: f64 = panels.iter().map(|p| p.value).collect::<CompensatedSum>().value();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        // the per-panel error estimate never drops below the roundoff floor
        let floor: f64 = 100.0 * f64::EPSILON * panels.iter().map(|p| p.abs_value).sum::<f64>();
        let target = tol_abs.max(tol_rel * total.abs()).max(floor);
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureNotConverged { tol: target, estimate: err });
        }
        if err <= target {
            return Ok(QuadResult { value: total, error: err, evaluations: evals });
        }
        if panels.len() >= max_panels {
            return Err(Error::QuadratureNotConverged { tol: target, estimate: err });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("nonempty");
        let p = panels.swap_remove(idx);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            return Err(Error::QuadratureNotConverged { tol: target, estimate: err });
        }
        panels.push(gk15(&f, p.a, m));
        panels.push(gk15(&f, m, p.b));
        evals += 30;
    }
}

/// `∫_a^∞ f` for an integrand decaying at least like `r^{-decay}` (`decay > 1`).
///
/// Integrates on `[a, R]` and bounds the remainder by `|f(R)| R / (decay - 1)`;
/// `R` is doubled until that bound is below `tol / 10`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, decay: f64, tol: f64) -> Result<QuadResult> {
    assert!(decay > 1.0);
    let tail = |r: f64| f(r).abs() * r / (decay - 1.0);
    let mut r_cut = (2.0 * a.abs()).max(1.0);
    while tail(r_cut) >= tol / 10.0 {
        r_cut *= 2.0;
        if r_cut > 1e300 {
            return Err(Error::QuadratureNotConverged { tol, estimate: tail(r_cut) });
        }
    }
    // geometric breakpoints keep each panel well resolved
    let mut edges = vec![a];
    let mut x = if a > 0.0 { a } else { 1.0 };
    if a <= 0.0 {
        edges.push(1.0f64.min(r_cut));
    }
    while x * 4.0 < r_cut {
        x *= 4.0;
        edges.push(x);
    }
    edges.push(r_cut);
    edges.dedup();
    let mut value = CompensatedSum::new();
    let mut error = tail(r_cut);
    let mut evals = 0;
    let per = 0.9 * tol / edges.len() as f64;
    for w in edges.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let q = integrate(&f, w[0], w[1], per, 0.0)?;
        value.add(q.value);
        error += q.error;
        evals += q.evaluations;
    }
    Ok(QuadResult { value: value.value(), error, evaluations: evals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((q.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand() {
        // ∫_0^1 eps/(eps^2 + (x-1/2)^2) = 2 atan(1/(2 eps))
        let eps = 1e-4;
        let q = integrate(|x| eps / (eps * eps + (x - 0.5).powi(2)), 0.0, 1.0, 1e-11, 0.0).unwrap();
        let exact = 2.0 * (0.5 / eps).atan();
        assert!((q.value - exact).abs() < 1e-10, "{} vs {}", q.value, exact);
    }

    #[test]
    fn half_line_power_decay() {
        // ∫_0^∞ r^2/(1+r^2)^3 dr = π/16
        let q = integrate_to_infinity(|r| r * r / (1.0 + r * r).powi(3), 0.0, 4.0, 1e-13).unwrap();
        assert!((q.value - std::f64::consts::PI / 16.0).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = integrate_with_limit(|x: f64| (x - 1.0 / 3.0).abs().powf(-0.9), 0.0, 1.0, 1e-14, 0.0, 20);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }
}
