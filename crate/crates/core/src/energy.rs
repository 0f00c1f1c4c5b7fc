//! Multi-bubble ansatz `U⁰ = Σ (w_i + π̃_i)`, its energy by quadrature, the
//! fit against the small-μ energy expansion, and the weighted error norm
//! `‖E‖_**` of the rescaled ansatz.
//!
//! The boundary correction is the two-term expansion
//! `π̃_i = μ_i^{1/2} (-4πα3 H_λ(x, ζ_i) + μ_i D0((x-ζ_i)/μ_i))`.
//!
//! Energies use the identity `J = ½ Σ_{i,j} ∫ w_i⁵ U_j - ⅙ ∫ (Σ U_i)⁶`, split by
//! a smooth partition of unity into bubble-centred cores (radial grading at
//! scale `μ_i`) and a far field on a graded spherical product grid. The regular
//! parts `H̃_λ(·, ζ_j)` are tabulated once per geometry, so a sweep over `μ`
//! only re-evaluates closed forms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::annulus::{polygon_points, sigma1_polygon, PolygonConfig};
use crate::bubble::{d0_closed_form, eval_bubble, BubbleParams, EnergyConstants, ALPHA3};
use crate::error::{Error, Result};
use crate::greens::{lambda1, newton_minus_free, DomainSpec, ModeKernel};
use crate::point::{add, dist, norm, scale, Point3};
use crate::special::{csum, gauss_legendre};

/// Default weight exponent of `‖·‖_**`.
pub const DEFAULT_NU: f64 = 0.5;
/// `μ_i` may not exceed this fraction of the distance to the boundary and to
/// the other centres.
pub const ADMISSIBLE_FRACTION: f64 = 0.2;
/// Tolerance of every regular-part evaluation.
pub const KERNEL_TOL: f64 = 1e-12;
/// Highest quadrature refinement level tried by [`energy`].
pub const MAX_LEVEL: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMode {
    /// `π̃_i = μ^{1/2}(-4πα3 H_λ(·,ζ_i) + μ D0(|·-ζ_i|/μ))`.
    RegularPartExpansion,
}

/// The evaluable ansatz. Built only through [`build_ansatz`].
#[derive(Clone, Debug)]
pub struct Ansatz {
    pub domain: DomainSpec,
    pub lambda: f64,
    pub bubbles: Vec<BubbleParams>,
    pub correction_mode: CorrectionMode,
    kernels: Vec<ModeKernel>,
    kernel_of: Vec<usize>,
}

/// Pieces of one bubble at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BubbleTerms {
    pub w: f64,
    /// `H_λ(x, ζ_i)`.
    pub regular: f64,
    /// `D0(|x-ζ_i|/μ_i)`.
    pub d0: f64,
    /// `π̃_i(x)`.
    pub correction: f64,
}

impl BubbleTerms {
    pub fn component(&self) -> f64 {
        self.w + self.correction
    }
}

fn correction(b: &BubbleParams, regular: f64, d0: f64) -> f64 {
    b.mu.sqrt() * (-4.0 * PI * ALPHA3 * regular + b.mu * d0)
}

/// Largest admissible `μ` at each centre.
pub fn admissible_mu(d: &DomainSpec, centers: &[Point3]) -> Vec<f64> {
    centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let nearest = centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, o)| dist(c, o))
                .fold(f64::INFINITY, f64::min);
            ADMISSIBLE_FRACTION * nearest.min(d.boundary_distance(c))
        })
        .collect()
}

pub fn build_ansatz(d: &DomainSpec, lambda: f64, bubbles: &[BubbleParams]) -> Result<Ansatz> {
    let invalid = |m: String| Error::InvalidConfiguration(m);
    d.validate().map_err(|e| invalid(e.to_string()))?;
    if !(lambda >= 0.0 && lambda < lambda1(d)) {
        return Err(invalid(format!("lambda must lie in [0, {}), got {lambda}", lambda1(d))));
    }
    let centers: Vec<Point3> = bubbles.iter().map(|b| b.center).collect();
    for (i, b) in bubbles.iter().enumerate() {
        if !(b.mu > 0.0 && b.mu.is_finite()) {
            return Err(invalid(format!("bubble {i}: mu must be positive, got {}", b.mu)));
        }
        if !d.contains(&b.center) {
            return Err(invalid(format!("bubble {i}: centre {:?} is not interior", b.center)));
        }
        for j in 0..i {
            if dist(&b.center, &bubbles[j].center) == 0.0 {
                return Err(invalid(format!("bubbles {j} and {i} share a centre")));
            }
        }
    }
    for (i, (b, cap)) in bubbles.iter().zip(admissible_mu(d, &centers)).enumerate() {
        if b.mu > cap {
            return Err(invalid(format!("bubble {i}: mu = {} exceeds {ADMISSIBLE_FRACTION}·min(distance) = {cap}", b.mu)));
        }
    }
    let mut radii: Vec<f64> = Vec::new();
    let mut kernel_of = Vec::with_capacity(bubbles.len());
    for b in bubbles {
        let s = norm(&b.center);
        let idx = match radii.iter().position(|&r| r == s) {
            Some(i) => i,
            None => {
                radii.push(s);
                radii.len() - 1
            }
        };
        kernel_of.push(idx);
    }
    let kernels = radii
        .iter()
        .map(|&s| ModeKernel::new(d, lambda, s, KERNEL_TOL))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| invalid(e.to_string()))?;
    Ok(Ansatz { domain: *d, lambda, bubbles: bubbles.to_vec(), correction_mode: CorrectionMode::RegularPartExpansion, kernels, kernel_of })
}

impl Ansatz {
    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    pub fn centers(&self) -> Vec<Point3> {
        self.bubbles.iter().map(|b| b.center).collect()
    }

    /// Same geometry and `λ`, new concentration rates.
    pub fn with_mus(&self, mus: &[f64]) -> Result<Ansatz> {
        if mus.len() != self.len() {
            return Err(Error::InvalidConfiguration(format!("expected {} rates, got {}", self.len(), mus.len())));
        }
        let caps = admissible_mu(&self.domain, &self.centers());
        let mut out = self.clone();
        for (i, (b, &mu)) in out.bubbles.iter_mut().zip(mus).enumerate() {
            if !(mu > 0.0 && mu <= caps[i]) {
                return Err(Error::InvalidConfiguration(format!("bubble {i}: mu = {mu} outside (0, {}]", caps[i])));
            }
            b.mu = mu;
        }
        Ok(out)
    }

    /// `H̃_λ(x, ζ_i)`, the mode-series part of the regular part.
    fn smooth_regular(&self, i: usize, x: &Point3) -> Result<f64> {
        let b = &self.bubbles[i];
        Ok(self.kernels[self.kernel_of[i]].smooth_part(x, &b.center, KERNEL_TOL)?.value)
    }

    fn terms_with(&self, i: usize, x: &Point3, smooth: f64) -> BubbleTerms {
        let b = &self.bubbles[i];
        let t = dist(x, &b.center);
        let regular = newton_minus_free(self.lambda, t) + smooth;
        let d0 = d0_closed_form(t / b.mu, self.lambda);
        BubbleTerms { w: eval_bubble(b, x), regular, d0, correction: correction(b, regular, d0) }
    }

    pub fn terms(&self, i: usize, x: &Point3) -> Result<BubbleTerms> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain(*x));
        }
        Ok(self.terms_with(i, x, self.smooth_regular(i, x)?))
    }

    /// `U_i(x) = w_i(x) + π̃_i(x)`.
    pub fn component(&self, i: usize, x: &Point3) -> Result<f64> {
        Ok(self.terms(i, x)?.component())
    }

    /// `U⁰(x)`.
    pub fn eval(&self, x: &Point3) -> Result<f64> {
        let mut u = 0.0;
        for i in 0..self.len() {
            u += self.component(i, x)?;
        }
        Ok(u)
    }

    fn all_terms(&self, x: &Point3) -> Result<Vec<BubbleTerms>> {
        (0..self.len()).map(|i| self.terms(i, x)).collect()
    }
}

/// `ΔU⁰ + λU⁰ + (U⁰)⁵ = (U⁰)⁵ - Σ w_i⁵ + λ Σ μ_i^{3/2} D0((x-ζ_i)/μ_i)`.
pub fn ansatz_residual(a: &Ansatz, x: &Point3) -> Result<f64> {
    if a.bubbles.iter().any(|b| dist(x, &b.center) == 0.0) {
        return Err(Error::CoincidentPoints);
    }
    let terms = a.all_terms(x)?;
    let u: f64 = terms.iter().map(|t| t.component()).sum();
    let w5: f64 = terms.iter().map(|t| t.w.powi(5)).sum();
    let src: f64 = terms.iter().zip(&a.bubbles).map(|(t, b)| a.lambda * b.mu.powf(1.5) * t.d0).sum();
    Ok(u.powi(5) - w5 + src)
}

/// The same residual with `ΔU⁰` from the fourth-order five-point stencil in
/// each coordinate, step `h`.
pub fn fd_residual(a: &Ansatz, x: &Point3, h: f64) -> Result<f64> {
    for axis in 0..3 {
        for s in [-2.0, 2.0] {
            let mut y = *x;
            y[axis] += s * h;
            if !a.domain.contains(&y) {
                return Err(Error::StencilLeavesDomain);
            }
        }
    }
    let u0 = a.eval(x)?;
    let mut lap = 0.0;
    for axis in 0..3 {
        let at = |s: f64| {
            let mut y = *x;
            y[axis] += s * h;
            a.eval(&y)
        };
        lap += (-at(2.0)? + 16.0 * at(1.0)? - 30.0 * u0 + 16.0 * at(-1.0)? - at(-2.0)?) / (12.0 * h * h);
    }
    Ok(lap + a.lambda * u0 + u0.powi(5))
}

/// `(w+δ)⁵ - w⁵` without cancellation.
fn fifth_power_increment(w: f64, d: f64) -> f64 {
    d * (5.0 * w.powi(4) + d * (10.0 * w.powi(3) + d * (10.0 * w * w + d * (5.0 * w + d))))
}

/// `ε^{-5/2} E(x/ε)`, evaluated around the dominant bubble.
fn error_at(a: &Ansatz, x: &Point3) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    let terms = a.all_terms(x)?;
    let i = (0..terms.len()).fold(0, |m, j| if terms[j].w > terms[m].w { j } else { m });
    let delta: f64 = terms.iter().enumerate().map(|(j, t)| if j == i { t.correction } else { t.component() }).sum();
    let others: f64 = terms.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, t)| t.w.powi(5)).sum();
    Ok(fifth_power_increment(terms[i].w, delta) - others)
}

/// `E(y) = V⁵ - Σ w_{μ'_i, ζ'_i}⁵` with `V(y) = ε^{1/2} U⁰(εy)`, `μ' = μ/ε`, `ζ' = ζ/ε`.
pub fn error_e(a: &Ansatz, eps: f64, y: &Point3) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfiguration(format!("eps must be positive, got {eps}")));
    }
    let x = scale(y, eps);
    if !a.domain.contains(&x) {
        return Err(Error::OutsideDomain(x));
    }
    Ok(eps.powf(2.5) * error_at(a, &x)?)
}

/// The weight of `‖·‖_**`: `ω(y) = Σ (1 + |y - ζ'_i|)^{-1}`, with exponent `ν`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedNorms {
    pub nu: f64,
    pub eps: f64,
    pub rescaled_centers: Vec<Point3>,
}

impl WeightedNorms {
    pub fn new(a: &Ansatz, eps: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidConfiguration(format!("nu must lie in (0,1), got {nu}")));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidConfiguration(format!("eps must be positive, got {eps}")));
        }
        Ok(WeightedNorms { nu, eps, rescaled_centers: a.centers().iter().map(|c| scale(c, 1.0 / eps)).collect() })
    }

    pub fn omega(&self, y: &Point3) -> f64 {
        self.rescaled_centers.iter().map(|c| 1.0 / (1.0 + dist(y, c))).sum()
    }

    /// `ω^{-(2+ν)} |f|` at `y`.
    pub fn weighted(&self, y: &Point3, f: f64) -> f64 {
        self.omega(y).powf(-(2.0 + self.nu)) * f.abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub value: f64,
    /// Maximising sample, in rescaled coordinates.
    pub argmax: Point3,
    /// `E` at the maximiser.
    pub error_at_argmax: f64,
    pub samples: usize,
    pub nu: f64,
    pub eps: f64,
}

/// Roughly uniform unit vectors (golden-angle spiral).
pub fn sphere_directions(n: usize) -> Vec<Point3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rxy = (1.0 - z * z).max(0.0).sqrt();
            let ph = golden * i as f64;
            [rxy * ph.cos(), rxy * ph.sin(), z]
        })
        .collect()
}

/// Sample set in original coordinates: log-spaced shells around each centre
/// from `μ_i/100` out to the boundary, plus a coarse spherical grid.
fn norm_samples(a: &Ansatz, budget: usize) -> Vec<Point3> {
    let mut pts = Vec::new();
    let k = a.len().max(1);
    let near = (3 * budget / 4) / k;
    let shells = 48usize;
    let dirs = sphere_directions((near / shells).max(6));
    for b in &a.bubbles {
        pts.push(b.center);
        let lo = 1e-2 * b.mu;
        let hi = 0.999 * a.domain.boundary_distance(&b.center);
        for s in 0..shells {
            let t = lo * (hi / lo).powf(s as f64 / (shells - 1) as f64);
            pts.extend(dirs.iter().map(|u| add(&b.center, &scale(u, t))).filter(|x| a.domain.contains(x)));
        }
    }
    let far = budget - budget.min(pts.len());
    let n = ((far as f64 / 2.0).cbrt().floor() as usize).max(2);
    let (r_lo, r_hi) = (a.domain.inner_radius(), 1.0);
    for ir in 0..n {
        let r = r_lo + (r_hi - r_lo) * (ir as f64 + 0.5) / n as f64;
        for it in 0..n {
            let th = PI * (it as f64 + 0.5) / n as f64;
            for ip in 0..2 * n {
                let ph = PI * ip as f64 / n as f64;
                pts.push([r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()]);
            }
        }
    }
    pts
}

/// `sup ω^{-(2+ν)} |E|` over a structured sample set.
pub fn norm_star_star(a: &Ansatz, eps: f64, nu: f64, sample_budget: usize) -> Result<NormReport> {
    let wn = WeightedNorms::new(a, eps, nu)?;
    let pts = norm_samples(a, sample_budget);
    let scale_e = eps.powf(2.5);
    let vals = pts
        .par_iter()
        .map(|x| {
            let y = scale(x, 1.0 / eps);
            let e = scale_e * error_at(a, x)?;
            Ok((wn.weighted(&y, e), y, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = (0.0, [0.0; 3], 0.0);
    for v in vals {
        if v.0 > best.0 {
            best = v;
        }
    }
    Ok(NormReport { value: best.0, argmax: best.1, error_at_argmax: best.2, samples: pts.len(), nu, eps })
}

/// `1` on `[0, ρ/2]`, `0` beyond `ρ`, smooth in between.
fn cutoff(t: f64, rho: f64) -> f64 {
    let s = (t - 0.5 * rho) / (0.5 * rho);
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let psi = |x: f64| (-1.0 / x).exp();
    let (p, q) = (psi(1.0 - s), psi(s));
    p / (p + q)
}

/// Barycentric interpolation on Chebyshev points of the second kind.
#[derive(Clone, Debug)]
struct ChebyshevNodes {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebyshevNodes {
    fn new(n: usize, lo: f64, hi: f64) -> Self {
        let nodes = (0..n).map(|j| lo + 0.5 * (hi - lo) * (1.0 - (PI * j as f64 / (n - 1) as f64).cos())).collect();
        let weights = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        ChebyshevNodes { nodes, weights }
    }

    /// Normalised interpolation weights at `t`.
    fn coefficients(&self, t: f64) -> Vec<f64> {
        if let Some(j) = self.nodes.iter().position(|&x| x == t) {
            let mut c = vec![0.0; self.nodes.len()];
            c[j] = 1.0;
            return c;
        }
        let raw: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(x, w)| w / (t - x)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }
}

/// Composite Gauss–Legendre nodes and weights over consecutive breakpoints.
fn composite_rule(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for p in breaks.windows(2) {
        let (c, h) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(c + h * xi);
            weights.push(h * wi);
        }
    }
    (nodes, weights)
}

/// Far-field boxes are refined until their largest extent is below this
/// fraction of their distance to the nearest centre.
const FAR_BOX_RATIO: f64 = 0.5;
/// Largest far-field box extent.
const FAR_BOX_MAX: f64 = 0.5;

/// A box in `(r, θ, φ)`.
#[derive(Clone, Copy, Debug)]
struct FarBox {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl FarBox {
    fn center_point(&self) -> Point3 {
        let (r, th, ph) = ((self.lo[0] + self.hi[0]) / 2.0, (self.lo[1] + self.hi[1]) / 2.0, (self.lo[2] + self.hi[2]) / 2.0);
        [r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()]
    }

    /// Physical extents along the three coordinate directions.
    fn extents(&self) -> [f64; 3] {
        let sin_max = if self.lo[1] <= PI / 2.0 && self.hi[1] >= PI / 2.0 { 1.0 } else { self.lo[1].sin().max(self.hi[1].sin()) };
        [
            self.hi[0] - self.lo[0],
            self.hi[0] * (self.hi[1] - self.lo[1]),
            self.hi[0] * sin_max * (self.hi[2] - self.lo[2]),
        ]
    }

    fn half_diagonal(&self) -> f64 {
        0.5 * norm(&self.extents())
    }

    fn split(&self, axis: usize) -> (FarBox, FarBox) {
        let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
        let (mut l, mut h) = (*self, *self);
        l.hi[axis] = mid;
        h.lo[axis] = mid;
        (l, h)
    }
}

/// `Σ c_l P_l(t)` by the plain three-term recurrence.
fn plain_legendre_sum(c: &[f64], t: f64) -> f64 {
    let mut acc = c.first().copied().unwrap_or(0.0);
    if c.len() < 2 {
        return acc;
    }
    acc += c[1] * t;
    let (mut p0, mut p1) = (1.0, t);
    for (l, &cl) in c.iter().enumerate().skip(2) {
        let lf = l as f64;
        let p2 = ((2.0 * lf - 1.0) * t * p1 - (lf - 1.0) * p0) / lf;
        acc += cl * p2;
        p0 = p1;
        p1 = p2;
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct LevelParams {
    far_order: usize,
    core_order: usize,
    core_panel: f64,
    polar_nodes: usize,
    chebyshev: usize,
}

fn level_params(level: usize) -> LevelParams {
    LevelParams {
        far_order: 5 + level,
        core_order: 8 + 2 * level,
        core_panel: 0.5,
        polar_nodes: 12 + 4 * level,
        chebyshev: 20 + 4 * level,
    }
}

#[derive(Clone, Debug)]
struct CoreGrid {
    center: Point3,
    rho: f64,
    dirs: Vec<Point3>,
    dir_weights: Vec<f64>,
    cheb: ChebyshevNodes,
    /// `smooth[j][d][c]` = `H̃_λ(ζ_i + t_c u_d, ζ_j)`.
    smooth: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug)]
struct FarGrid {
    points: Vec<Point3>,
    /// Quadrature weight times `1 - Σ χ_i`.
    weights: Vec<f64>,
    /// `smooth[p][j]`.
    smooth: Vec<Vec<f64>>,
}

/// Quadrature for a fixed domain, `λ` and set of centres; any rates can be
/// integrated with it.
#[derive(Clone, Debug)]
pub struct EnergyQuadrature {
    pub level: usize,
    domain: DomainSpec,
    lambda: f64,
    centers: Vec<Point3>,
    cores: Vec<CoreGrid>,
    far: FarGrid,
}

/// Core radius: a fixed fraction of the distance to the boundary and half
/// the distance to the nearest other centre.
fn core_radii(d: &DomainSpec, centers: &[Point3]) -> Vec<f64> {
    centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let half_gap = centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, o)| 0.5 * dist(c, o))
                .fold(f64::INFINITY, f64::min);
            0.9 * d.boundary_distance(c).min(half_gap)
        })
        .collect()
}

impl EnergyQuadrature {
    pub fn new(a: &Ansatz, level: usize) -> Result<Self> {
        let lp = level_params(level);
        let centers = a.centers();
        let radii = core_radii(&a.domain, &centers);
        let (gx, gw) = gauss_legendre(lp.polar_nodes);
        let n_az = 2 * lp.polar_nodes;
        let mut dirs = Vec::new();
        let mut dir_weights = Vec::new();
        for (z, wz) in gx.iter().zip(&gw) {
            let s = (1.0 - z * z).sqrt();
            for m in 0..n_az {
                let ph = 2.0 * PI * (m as f64 + 0.5) / n_az as f64;
                dirs.push([s * ph.cos(), s * ph.sin(), *z]);
                dir_weights.push(wz * 2.0 * PI / n_az as f64);
            }
        }
        let cores = centers
            .iter()
            .zip(&radii)
            .map(|(c, &rho)| {
                let cheb = ChebyshevNodes::new(lp.chebyshev, 0.0, rho);
                let smooth = (0..a.len())
                    .map(|j| {
                        dirs.par_iter()
                            .map(|u| cheb.nodes.iter().map(|&t| a.smooth_regular(j, &add(c, &scale(u, t)))).collect::<Result<Vec<_>>>())
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(CoreGrid { center: *c, rho, dirs: dirs.clone(), dir_weights: dir_weights.clone(), cheb, smooth })
            })
            .collect::<Result<Vec<_>>>()?;
        let far = Self::far_grid(a, &centers, &radii, lp)?;
        Ok(EnergyQuadrature { level, domain: a.domain, lambda: a.lambda, centers, cores, far })
    }

    fn far_grid(a: &Ansatz, centers: &[Point3], radii: &[f64], lp: LevelParams) -> Result<FarGrid> {
        let floor = 0.25 * radii.iter().copied().fold(f64::INFINITY, f64::min);
        let root = FarBox { lo: [a.domain.inner_radius(), 0.0, 0.0], hi: [1.0, PI, 2.0 * PI] };
        let mut leaves = Vec::new();
        let mut stack = vec![root];
        while let Some(b) = stack.pop() {
            let c = b.center_point();
            let half = b.half_diagonal();
            if centers.iter().zip(radii).any(|(z, &rho)| dist(&c, z) + half <= 0.5 * rho) {
                continue;
            }
            let near = centers.iter().map(|z| dist(&c, z) - half).fold(f64::INFINITY, f64::min);
            let allowed = (FAR_BOX_RATIO * near.max(floor)).min(FAR_BOX_MAX);
            let ext = b.extents();
            let axis = (0..3).fold(0, |m, i| if ext[i] > ext[m] { i } else { m });
            if ext[axis] > allowed {
                let (l, h) = b.split(axis);
                stack.push(h);
                stack.push(l);
            } else {
                leaves.push(b);
            }
        }
        let (gx, gw) = gauss_legendre(lp.far_order);
        let map = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
            gx.iter().zip(&gw).map(|(x, w)| (0.5 * (lo + hi) + 0.5 * (hi - lo) * x, 0.5 * (hi - lo) * w)).collect()
        };
        let mut radial: Vec<f64> = leaves.iter().flat_map(|b| map(b.lo[0], b.hi[0]).into_iter().map(|p| p.0)).collect();
        radial.sort_by(f64::total_cmp);
        radial.dedup();
        let coeffs = radial
            .par_iter()
            .map(|&r| a.kernels.iter().map(|kern| Ok(kern.radial_coefficients(r, KERNEL_TOL)?.coeffs)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let unit: Vec<Point3> = centers.iter().map(|z| if norm(z) == 0.0 { [0.0, 0.0, 1.0] } else { scale(z, 1.0 / norm(z)) }).collect();
        let per_leaf = leaves
            .par_iter()
            .map(|b| {
                let mut out = (Vec::new(), Vec::new(), Vec::new());
                for (r, wr) in map(b.lo[0], b.hi[0]) {
                    let ri = radial.binary_search_by(|v| v.total_cmp(&r)).expect("radial node tabulated");
                    for (th, wt) in map(b.lo[1], b.hi[1]) {
                        let (st, ct) = th.sin_cos();
                        for (ph, wp) in map(b.lo[2], b.hi[2]) {
                            let (sp, cp) = ph.sin_cos();
                            let x = [r * st * cp, r * st * sp, r * ct];
                            let chi: f64 = centers.iter().zip(radii).map(|(z, &rho)| cutoff(dist(&x, z), rho)).sum();
                            if chi >= 1.0 {
                                continue;
                            }
                            let xhat = [st * cp, st * sp, ct];
                            let h: Vec<f64> = a
                                .kernel_of
                                .iter()
                                .zip(&unit)
                                .map(|(&ki, u)| plain_legendre_sum(&coeffs[ri][ki], crate::point::dot(&xhat, u).clamp(-1.0, 1.0)))
                                .collect();
                            out.0.push(x);
                            out.1.push(wr * wt * wp * r * r * st * (1.0 - chi));
                            out.2.push(h);
                        }
                    }
                }
                out
            })
            .collect::<Vec<_>>();
        let mut far = FarGrid { points: Vec::new(), weights: Vec::new(), smooth: Vec::new() };
        for (p, w, s) in per_leaf {
            far.points.extend(p);
            far.weights.extend(w);
            far.smooth.extend(s);
        }
        Ok(far)
    }

    pub fn far_nodes(&self) -> usize {
        self.far.points.len()
    }

    pub fn core_nodes(&self, a: &Ansatz) -> usize {
        let lp = level_params(self.level);
        self.cores
            .iter()
            .zip(&a.bubbles)
            .map(|(c, b)| core_radial_rule(c.rho, b.mu, lp).0.len() * c.dirs.len())
            .sum()
    }

    fn check(&self, a: &Ansatz) -> Result<()> {
        if a.domain != self.domain || a.lambda != self.lambda || a.centers() != self.centers {
            return Err(Error::InvalidConfiguration("quadrature was built for another geometry".into()));
        }
        Ok(())
    }

    /// `½ Σ_i w_i⁵ U - ⅙ U⁶` at `x`, given the tabulated `H̃` values.
    fn density(a: &Ansatz, x: &Point3, smooth: impl Fn(usize) -> f64) -> f64 {
        let mut u = 0.0;
        let mut w5 = 0.0;
        for i in 0..a.len() {
            let t = a.terms_with(i, x, smooth(i));
            u += t.component();
            w5 += t.w.powi(5);
        }
        0.5 * w5 * u - u.powi(6) / 6.0
    }

    /// `J(U⁰)` for the rates carried by `a`.
    pub fn integrate(&self, a: &Ansatz) -> Result<f64> {
        self.check(a)?;
        if a.is_empty() {
            return Ok(0.0);
        }
        let lp = level_params(self.level);
        let mut parts = Vec::new();
        for (core, b) in self.cores.iter().zip(&a.bubbles) {
            let (tn, tw) = core_radial_rule(core.rho, b.mu, lp);
            let interp: Vec<Vec<f64>> = tn.iter().map(|&t| core.cheb.coefficients(t)).collect();
            let shells = tn
                .par_iter()
                .zip(&tw)
                .zip(&interp)
                .map(|((&t, &wt), ic)| {
                    let chi = cutoff(t, core.rho);
                    let vals = core.dirs.iter().enumerate().map(|(d, u)| {
                        let x = add(&core.center, &scale(u, t));
                        let f = Self::density(a, &x, |j| ic.iter().zip(&core.smooth[j][d]).map(|(c, v)| c * v).sum());
                        core.dir_weights[d] * f
                    });
                    wt * t * t * chi * csum(vals)
                })
                .collect::<Vec<_>>();
            parts.push(csum(shells));
        }
        let far = self
            .far
            .points
            .par_iter()
            .zip(&self.far.weights)
            .zip(&self.far.smooth)
            .map(|((x, &w), h)| w * Self::density(a, x, |j| h[j]))
            .collect::<Vec<_>>();
        parts.push(csum(far));
        Ok(csum(parts))
    }
}

/// Radial rule on `[0, ρ]` in `u = asinh(t/μ)`: panels of width `core_panel`
/// up to `t = ρ/2`, then four panels across the cutoff transition.
fn core_radial_rule(rho: f64, mu: f64, lp: LevelParams) -> (Vec<f64>, Vec<f64>) {
    let u_half = (0.5 * rho / mu).asinh();
    let u_end = (rho / mu).asinh();
    let n = (u_half / lp.core_panel).ceil().max(1.0) as usize;
    let mut breaks: Vec<f64> = (0..=n).map(|j| u_half * j as f64 / n as f64).collect();
    breaks.extend((1..=4).map(|j| u_half + (u_end - u_half) * j as f64 / 4.0));
    let (un, uw) = composite_rule(&breaks, lp.core_order);
    let tn = un.iter().map(|u| mu * u.sinh()).collect();
    let tw = un.iter().zip(&uw).map(|(u, w)| w * mu * u.cosh()).collect();
    (tn, tw)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub error_estimate: f64,
    pub level: usize,
    pub core_nodes: usize,
    pub far_nodes: usize,
}

/// `J_λ(U⁰)`; the error estimate is the change from the previous level.
pub fn energy(a: &Ansatz, tol: f64) -> Result<EnergyEstimate> {
    if a.is_empty() {
        return Ok(EnergyEstimate { value: 0.0, error_estimate: 0.0, level: 0, core_nodes: 0, far_nodes: 0 });
    }
    let mut prev = EnergyQuadrature::new(a, 0)?.integrate(a)?;
    let mut estimate = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        let q = EnergyQuadrature::new(a, level)?;
        let cur = q.integrate(a)?;
        estimate = (cur - prev).abs();
        if estimate <= tol {
            return Ok(EnergyEstimate { value: cur, error_estimate: estimate, level, core_nodes: q.core_nodes(a), far_nodes: q.far_nodes() });
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { tol, estimate })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitRow {
    pub mu: f64,
    pub energy: f64,
    pub error_estimate: f64,
    /// `energy - k a0`.
    pub excess: f64,
    /// `excess - c1 μ - c2 μ²`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub k: usize,
    pub r: f64,
    pub a: f64,
    pub lambda: f64,
    pub sigma1: f64,
    pub c1_target: f64,
    pub c2_target: f64,
    pub c1_relative_error: f64,
    pub c2_relative_error: f64,
    pub quadrature_level: usize,
    pub rows: Vec<FitRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionFit {
    pub c1: f64,
    pub c2: f64,
    /// Exponent `p` of the remainder `C μ^p` left after the two expansion terms.
    pub order: f64,
    pub report: FitReport,
}

/// Least-squares fit of `y = c1 μ + c2 μ² + c3 μ^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RemainderFit {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub order: f64,
    /// Root-mean-square misfit of `y/μ`.
    pub rms: f64,
}

/// Least squares on orthogonalised columns (modified Gram–Schmidt).
fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = cols.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut r = vec![vec![0.0; m]; m];
    for (j, c) in cols.iter().enumerate() {
        let mut v = c.clone();
        let size = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for i in 0..j {
            let d: f64 = q[i].iter().zip(&v).map(|(a, b)| a * b).sum();
            r[i][j] = d;
            v.iter_mut().zip(&q[i]).for_each(|(x, qi)| *x -= d * qi);
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(nv > 1e-10 * size) {
            return None;
        }
        r[j][j] = nv;
        q.push(v.into_iter().map(|x| x / nv).collect());
    }
    let qty: Vec<f64> = q.iter().map(|qi| qi.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let mut x = vec![0.0; m];
    for j in (0..m).rev() {
        x[j] = (qty[j] - (j + 1..m).map(|l| r[j][l] * x[l]).sum::<f64>()) / r[j][j];
    }
    let fitted: Vec<f64> = (0..y.len()).map(|n| (0..m).map(|j| cols[j][n] * x[j]).sum()).collect();
    let rss: f64 = fitted.iter().zip(y).map(|(f, v)| (f - v).powi(2)).sum();
    Some((x, rss))
}

/// Variable projection over the exponent `p ∈ [1.5, 6]`: for each `p` the
/// coefficients solve a linear problem in `y/μ`; `p` minimises the misfit.
pub fn remainder_fit(mu: &[f64], y: &[f64]) -> Result<RemainderFit> {
    if mu.len() < 5 || mu.len() != y.len() {
        return Err(Error::FitIllConditioned(format!("need at least 5 rates for a remainder fit, got {}", mu.len())));
    }
    let top = mu.iter().copied().fold(0.0, f64::max);
    let t: Vec<f64> = mu.iter().map(|m| m / top).collect();
    let z: Vec<f64> = mu.iter().zip(y).map(|(m, v)| v / m).collect();
    let solve = |p: f64| least_squares(&[vec![1.0; t.len()], t.clone(), t.iter().map(|v| v.powf(p - 1.0)).collect()], &z);
    let misfit = |p: f64| -> Result<f64> { Ok(solve(p).map_or(f64::INFINITY, |s| s.1)) };
    let scan: Vec<f64> = (0..=90).map(|i| 1.5 + 0.05 * i as f64).collect();
    let mut best = 0;
    let mut values = Vec::with_capacity(scan.len());
    for (i, &p) in scan.iter().enumerate() {
        values.push(misfit(p)?);
        if values[i] < values[best] {
            best = i;
        }
    }
    if !values[best].is_finite() {
        return Err(Error::FitIllConditioned("no exponent gives a well-posed fit".into()));
    }
    let lo = scan[best.saturating_sub(1)];
    let hi = scan[(best + 1).min(scan.len() - 1)];
    let (p, _) = crate::annulus::golden_section(misfit, lo, hi, 1e-6)?;
    let (x, rss) = solve(p).ok_or_else(|| Error::FitIllConditioned(format!("exponent {p} is degenerate")))?;
    Ok(RemainderFit {
        c1: x[0],
        c2: x[1] / top,
        c3: x[2] / top.powf(p - 1.0),
        order: p,
        rms: (rss / z.len() as f64).sqrt(),
    })
}

/// Ordinary least squares for `y = c0 + c1 x`; `None` if the design is singular.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let spread = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if x.len() < 2 || sxx <= 1e-24 * spread * spread * n {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Quadrature level used by [`expansion_fit`]; the next lower level supplies
/// the error estimate.
pub const FIT_LEVEL: usize = 1;

/// Fits `J(μ) - k a0 = c1 μ + c2 μ²` over an equal-rate polygon.
pub fn expansion_fit(
    d: &DomainSpec,
    config: &PolygonConfig,
    lambda: f64,
    mu_grid: &[f64],
    consts: &EnergyConstants,
) -> Result<ExpansionFit> {
    if *d != (DomainSpec::Annulus { a: config.a }) {
        return Err(Error::InvalidConfiguration("domain does not match the polygon configuration".into()));
    }
    if mu_grid.iter().any(|&m| !(m > 0.0 && m <= 0.1)) || mu_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfiguration("mu grid must be descending within (0, 0.1]".into()));
    }
    let k = config.k;
    let pts = polygon_points(config);
    let mk = |mu: f64| -> Result<Vec<BubbleParams>> { pts.iter().map(|c| BubbleParams::new(mu, *c)).collect() };
    let [a0, a1, a2, a3] = consts.values();
    let base = build_ansatz(d, lambda, &mk(mu_grid[0])?)?;
    let fine = EnergyQuadrature::new(&base, FIT_LEVEL)?;
    let coarse = EnergyQuadrature::new(&base, FIT_LEVEL - 1)?;
    let mut rows = Vec::new();
    for &mu in mu_grid {
        let an = base.with_mus(&vec![mu; k])?;
        let e = fine.integrate(&an)?;
        let err = (e - coarse.integrate(&an)?).abs();
        rows.push(FitRow { mu, energy: e, error_estimate: err, excess: e - k as f64 * a0, residual: 0.0 });
    }
    let mus: Vec<f64> = rows.iter().map(|r| r.mu).collect();
    let excess: Vec<f64> = rows.iter().map(|r| r.excess).collect();
    let fit = remainder_fit(&mus, &excess)?;
    for r in rows.iter_mut() {
        r.residual = r.excess - fit.c1 * r.mu - fit.c2 * r.mu * r.mu;
    }
    let (c1, c2, order) = (fit.c1, fit.c2, fit.order);
    let sigma1 = sigma1_polygon(config.a, k, lambda, config.r, 1e-13)?;
    let kf = k as f64;
    let c1_target = a1 * kf * sigma1;
    let c2_target = a2 * lambda * kf - a3 * kf * sigma1 * sigma1;
    let report = FitReport {
        k,
        r: config.r,
        a: config.a,
        lambda,
        sigma1,
        c1_target,
        c2_target,
        c1_relative_error: ((c1 - c1_target) / c1_target).abs(),
        c2_relative_error: ((c2 - c2_target) / c2_target).abs(),
        quadrature_level: FIT_LEVEL,
        rows,
    };
    Ok(ExpansionFit { c1, c2, order, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{green, robin};

    fn ball_pair(mu: f64, lambda: f64) -> Ansatz {
        let b = [BubbleParams::new(mu, [0.4, 0.0, 0.0]).unwrap(), BubbleParams::new(mu, [-0.4, 0.0, 0.0]).unwrap()];
        build_ansatz(&DomainSpec::UnitBall, lambda, &b).unwrap()
    }

    #[test]
    fn invariants_enforced() {
        let d = DomainSpec::UnitBall;
        let ok = BubbleParams::new(0.01, [0.5, 0.0, 0.0]).unwrap();
        assert!(build_ansatz(&d, 1.0, &[ok]).is_ok());
        let fat = BubbleParams::new(0.2, [0.5, 0.0, 0.0]).unwrap();
        assert!(matches!(build_ansatz(&d, 1.0, &[fat]), Err(Error::InvalidConfiguration(_))));
        assert!(build_ansatz(&d, 1.0, &[ok, ok]).is_err());
        let out = BubbleParams::new(0.01, [1.5, 0.0, 0.0]).unwrap();
        assert!(build_ansatz(&d, 1.0, &[out]).is_err());
        assert!(build_ansatz(&d, 20.0, &[ok]).is_err());
    }

    #[test]
    fn far_field_matches_green() {
        let lambda = 2.0;
        let zeta = [0.3, 0.1, 0.0];
        let x = [-0.2, 0.4, 0.3];
        let g = green(&DomainSpec::UnitBall, lambda, &x, &zeta, 1e-13).unwrap().value;
        for mu in [1e-3, 1e-4] {
            let a = build_ansatz(&DomainSpec::UnitBall, lambda, &[BubbleParams::new(mu, zeta).unwrap()]).unwrap();
            let lim = a.eval(&x).unwrap() / mu.sqrt();
            assert!((lim - 4.0 * PI * ALPHA3 * g).abs() < 1e-3 * 4.0 * PI * ALPHA3 * g.abs(), "{lim}");
        }
    }

    #[test]
    fn residual_identity_against_stencil() {
        let a = ball_pair(1e-2, 2.0);
        for x in [[0.43, 0.02, -0.01], [0.1, 0.3, 0.2], [-0.38, -0.05, 0.04], [0.0, 0.0, 0.7]] {
            let r = ansatz_residual(&a, &x).unwrap();
            let f = fd_residual(&a, &x, 1e-4).unwrap();
            assert!((r - f).abs() < 1e-4, "{x:?}: {r} vs {f}");
        }
        assert!(matches!(ansatz_residual(&a, &[0.4, 0.0, 0.0]), Err(Error::CoincidentPoints)));
        assert!(matches!(fd_residual(&a, &[0.99995, 0.0, 0.0], 1e-4), Err(Error::StencilLeavesDomain)));
    }

    #[test]
    fn error_at_center_unfolds() {
        let d = DomainSpec::UnitBall;
        let (mu, eps, zeta) = (2e-3, 1e-2, [0.2, 0.0, 0.1]);
        let a = build_ansatz(&d, 1.5, &[BubbleParams::new(mu, zeta).unwrap()]).unwrap();
        let y = scale(&zeta, 1.0 / eps);
        let wp = ALPHA3 / (mu / eps).sqrt();
        let pi = a.terms(0, &zeta).unwrap().correction;
        let direct = (wp + eps.sqrt() * pi).powi(5) - wp.powi(5);
        let e = error_e(&a, eps, &y).unwrap();
        assert!((e - direct).abs() < 1e-9 * direct.abs(), "{e} vs {direct}");
        let empty = build_ansatz(&d, 1.5, &[]).unwrap();
        assert_eq!(error_e(&empty, eps, &y).unwrap(), 0.0);
    }

    #[test]
    fn error_near_centre_follows_interaction_matrix() {
        let (mu, eps, lambda): (f64, f64, f64) = (1e-2, 1e-2, 1.0);
        let a = ball_pair(mu, lambda);
        let zeta = a.centers();
        let d = DomainSpec::UnitBall;
        let g = robin(&d, lambda, &zeta[0], 1e-13).unwrap().value;
        let gg = green(&d, lambda, &zeta[0], &zeta[1], 1e-13).unwrap().value;
        let m_mu = mu.sqrt() * (g - gg);
        let predicted = -20.0 * PI * ALPHA3 * eps.sqrt() * m_mu;
        let wp = ALPHA3 / (mu / eps).sqrt();
        let ratio = error_e(&a, eps, &scale(&zeta[0], 1.0 / eps)).unwrap() / wp.powi(4);
        assert!((ratio / predicted - 1.0).abs() < 0.2, "{ratio} vs {predicted}");
    }

    #[test]
    fn single_bubble_energy_expansion() {
        let d = DomainSpec::UnitBall;
        let lambda = 2.0;
        let zeta = [0.0, 0.0, 0.2];
        let g = robin(&d, lambda, &zeta, 1e-13).unwrap().value;
        let [a0, a1, ..] = EnergyConstants::closed_forms().values();
        let e = |mu: f64| {
            let a = build_ansatz(&d, lambda, &[BubbleParams::new(mu, zeta).unwrap()]).unwrap();
            energy(&a, 1e-9).unwrap().value
        };
        let (m, h) = (1e-2, 5e-3);
        let q1 = (e(m) - a0) / m;
        let q2 = (e(h) - a0) / h;
        let rich = 2.0 * q2 - q1;
        assert!((rich - a1 * g).abs() < 0.03 * (a1 * g).abs(), "{rich} vs {}", a1 * g);
    }

    #[test]
    fn cutoff_and_grid_helpers() {
        assert_eq!(cutoff(0.3, 1.0), 1.0);
        assert_eq!(cutoff(1.2, 1.0), 0.0);
        assert!((cutoff(0.75, 1.0) - 0.5).abs() < 1e-15);
        let (n, w) = composite_rule(&[0.0, 0.5, 2.0], 5);
        let s: f64 = w.iter().zip(&n).map(|(w, x)| w * x.powi(9)).sum();
        assert!((s - 102.4).abs() < 1e-12, "{s}");
        assert!((plain_legendre_sum(&[0.5, -1.0, 2.0], 0.3) - (0.5 - 0.3 + 2.0 * (1.5 * 0.09 - 0.5))).abs() < 1e-15);
        let ch = ChebyshevNodes::new(12, 0.0, 2.0);
        let c = ch.coefficients(0.77);
        let v: f64 = c.iter().zip(&ch.nodes).map(|(c, x)| c * x.exp()).sum();
        assert!((v - 0.77f64.exp()).abs() < 1e-11);
    }

    #[test]
    fn remainder_fit_recovers_synthetic_expansion() {
        let mu: Vec<f64> = (0..7).map(|i| 10f64.powf(-2.0 - 0.25 * i as f64)).collect();
        let y: Vec<f64> = mu.iter().map(|m| 3.0 * m + 50.0 * m * m - 4e4 * m.powf(3.2)).collect();
        let f = remainder_fit(&mu, &y).unwrap();
        assert!((f.c1 - 3.0).abs() < 1e-6 && (f.c2 - 50.0).abs() < 1e-3, "{f:?}");
        assert!((f.order - 3.2).abs() < 1e-4 && (f.c3 + 4e4).abs() < 1.0, "{f:?}");
        assert!(matches!(remainder_fit(&mu[..4], &y[..4]), Err(Error::FitIllConditioned(_))));
    }

    #[test]
    fn weighted_norm_rejects_bad_nu() {
        let a = ball_pair(1e-2, 2.0);
        assert!(norm_star_star(&a, 0.1, 1.0, 100).is_err());
        assert!(norm_star_star(&a, 0.1, 0.5, 400).unwrap().value > 0.0);
    }
}
