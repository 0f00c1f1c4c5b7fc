//! Special functions used by the Green-function engine and the quadratures.
//!
//! Spherical Bessel functions are returned as [`Scaled`] numbers (mantissa and
//! binary exponent) so that `y_l(x)` for large `l` or tiny `x`, and `j_l(x)`
//! deep in its power-law regime, neither overflow nor underflow.

use std::f64::consts::LN_2;

/// A real number stored as `mant * 2^exp` with `0.5 <= |mant| < 1` (or zero).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    mant: f64,
    exp: i32,
}

fn frexp(x: f64) -> (f64, i32) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let mut bits = x.to_bits();
    let mut shift = 0;
    if (bits >> 52) & 0x7ff == 0 {
        // subnormal
        bits = (x * f64::from_bits(0x4350_0000_0000_0000)).to_bits(); // 2^54
        shift = -54;
    }
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let mant_bits = (bits & !(0x7ff_u64 << 52)) | (1022_u64 << 52);
    (f64::from_bits(mant_bits), biased - 1022 + shift)
}

fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

fn ldexp(mut m: f64, mut e: i32) -> f64 {
    while e > 1000 {
        m *= pow2(1000);
        e -= 1000;
        if !m.is_finite() {
            return m;
        }
    }
    while e < -1000 {
        m *= pow2(-1000);
        e += 1000;
        if m == 0.0 {
            return m;
        }
    }
    m * pow2(e)
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mant: 0.0, exp: 0 };

    pub fn new(x: f64) -> Self {
        let (mant, exp) = frexp(x);
        Scaled { mant, exp }
    }

    /// `m * 2^e` for an arbitrary finite mantissa.
    pub fn from_parts(m: f64, e: i32) -> Self {
        let (mant, de) = frexp(m);
        if mant == 0.0 {
            return Self::ZERO;
        }
        Scaled { mant, exp: e + de }
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    pub fn signum(self) -> f64 {
        if self.mant == 0.0 {
            0.0
        } else {
            self.mant.signum()
        }
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.mant, self.exp)
    }

    /// Natural logarithm of the magnitude.
    pub fn ln_abs(self) -> f64 {
        self.mant.abs().ln() + self.exp as f64 * LN_2
    }

    pub fn abs(self) -> Self {
        Scaled {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    pub fn neg(self) -> Self {
        Scaled {
            mant: -self.mant,
            exp: self.exp,
        }
    }

    pub fn mul(self, o: Scaled) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::ZERO;
        }
        Self::from_parts(self.mant * o.mant, self.exp + o.exp)
    }

    pub fn mul_f64(self, x: f64) -> Self {
        self.mul(Scaled::new(x))
    }

    pub fn div(self, o: Scaled) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::from_parts(self.mant / o.mant, self.exp - o.exp)
    }

    pub fn add(self, o: Scaled) -> Self {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.exp >= o.exp { (self, o) } else { (o, self) };
        let d = small.exp - big.exp;
        if d < -60 {
            return big;
        }
        Self::from_parts(big.mant + ldexp(small.mant, d), big.exp)
    }

    pub fn sub(self, o: Scaled) -> Self {
        self.add(o.neg())
    }

    /// Compare magnitudes.
    pub fn abs_gt(self, o: Scaled) -> bool {
        if o.is_zero() {
            return !self.is_zero();
        }
        if self.is_zero() {
            return false;
        }
        if self.exp != o.exp {
            self.exp > o.exp
        } else {
            self.mant.abs() > o.mant.abs()
        }
    }
}

/// `j_0, ..., j_lmax` at `x >= 0`.
///
/// Ratios `j_l / j_{l-1}` come from the downward (Miller) continued fraction,
/// anchored on whichever of `j_0`, `j_1` is larger in magnitude.
pub fn spherical_jn_scaled(lmax: usize, x: f64) -> Vec<Scaled> {
    let mut out = vec![Scaled::ZERO; lmax + 1];
    if x == 0.0 {
        out[0] = Scaled::new(1.0);
        return out;
    }
    let j0 = if x < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    out[0] = Scaled::new(j0);
    if lmax == 0 {
        return out;
    }
    let j1 = if x < 0.5 {
        let x2 = x * x;
        x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)))
    } else {
        x.sin() / (x * x) - x.cos() / x
    };
    let top = lmax.max(x.ceil() as usize);
    let start = top + 30 + (10.0 * (top as f64).sqrt()) as usize;
    let mut ratios = vec![0.0; lmax + 1];
    let mut r = 0.0;
    for l in (1..=start).rev() {
        r = x / ((2 * l + 1) as f64 - x * r);
        if l <= lmax {
            ratios[l] = r;
        }
    }
    let anchor_one = j1.abs() > j0.abs();
    let mut cur = if anchor_one { Scaled::new(j1) } else { Scaled::new(j0) };
    if anchor_one {
        out[1] = cur;
    }
    let first = if anchor_one { 2 } else { 1 };
    for l in first..=lmax {
        cur = cur.mul_f64(ratios[l]);
        out[l] = cur;
    }
    out
}

/// `y_0, ..., y_lmax` at `x > 0` by upward recurrence (stable for the
/// irregular solution).
pub fn spherical_yn_scaled(lmax: usize, x: f64) -> Vec<Scaled> {
    assert!(x > 0.0, "y_l is singular at the origin");
    let mut out = Vec::with_capacity(lmax + 1);
    let y0 = -x.cos() / x;
    out.push(Scaled::new(y0));
    if lmax == 0 {
        return out;
    }
    let y1 = -x.cos() / (x * x) - x.sin() / x;
    out.push(Scaled::new(y1));
    // values carried as plain floats times 2^offset
    let mut prev = y0;
    let mut cur = y1;
    let mut offset = 0i32;
    for l in 1..lmax {
        let next = (2 * l + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
        let (m, e) = frexp(cur);
        if e > 600 || (e < -600 && m != 0.0) {
            prev = ldexp(prev, -e);
            cur = m;
            offset += e;
        }
        out.push(Scaled::from_parts(cur, offset));
    }
    out
}

/// `P_0(t), ..., P_lmax(t)` by the three-term recurrence.
pub fn legendre_all(lmax: usize, t: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(lmax + 1);
    p.push(1.0);
    if lmax == 0 {
        return p;
    }
    p.push(t);
    for l in 1..lmax {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * t * p[l] - lf * p[l - 1]) / (lf + 1.0);
        p.push(next);
    }
    p
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn csum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for l in 1..n {
                let lf = l as f64;
                let p2 = ((2.0 * lf + 1.0) * z * p1 - lf * p0) / (lf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Natural log of the Gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}
