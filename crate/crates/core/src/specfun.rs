//! Special functions used by the receivers and the BER engines.
//!
//! Everything here is evaluated so that intermediate quantities never
//! overflow: the modified Bessel function is returned as its natural
//! logarithm, the incomplete beta prefactor is formed from a
//! cancellation-free Stirling kernel, and Poisson weights use the
//! saddle-point form of the log pmf.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};
use std::ops::{Add, Mul, Neg};
use std::sync::OnceLock;

use crate::error::{domain, Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A real number stored as `sign * exp(log_magnitude)`.
///
/// Used for the Poisson-weighted double series, where terms like
/// `(lambda/2)^(j+k) / (j! k!)` overflow long before they become small again.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDomainValue {
    log_magnitude: f64,
    sign: i8,
}

impl LogDomainValue {
    pub const ZERO: Self = Self { log_magnitude: f64::NEG_INFINITY, sign: 0 };
    pub const ONE: Self = Self { log_magnitude: 0.0, sign: 1 };

    /// Builds a positive value from its logarithm. `-inf` maps to zero.
    pub fn from_ln(log_magnitude: f64) -> Self {
        Self::from_parts(log_magnitude, 1)
    }

    pub fn from_parts(log_magnitude: f64, sign: i8) -> Self {
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            debug_assert!(log_magnitude.is_finite(), "non-finite log magnitude");
            Self { log_magnitude, sign: sign.signum() }
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self::from_parts(v.abs().ln(), if v > 0.0 { 1 } else { -1 })
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_magnitude.exp(),
        }
    }

    pub fn ln_abs(self) -> f64 {
        self.log_magnitude
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Raises to a non-negative real power.
    pub fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Self::ONE;
        }
        assert!(self.sign >= 0, "powf of a negative LogDomainValue");
        Self::from_parts(self.log_magnitude * p, self.sign)
    }
}

impl Mul for LogDomainValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_parts(self.log_magnitude + rhs.log_magnitude, self.sign * rhs.sign)
    }
}

impl Neg for LogDomainValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self { log_magnitude: self.log_magnitude, sign: -self.sign }
    }
}

impl Add for LogDomainValue {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.log_magnitude >= rhs.log_magnitude { (self, rhs) } else { (rhs, self) };
        let ratio = (lo.log_magnitude - hi.log_magnitude).exp();
        if hi.sign == lo.sign {
            Self::from_parts(hi.log_magnitude + ratio.ln_1p(), hi.sign)
        } else if ratio == 1.0 {
            Self::ZERO
        } else {
            Self::from_parts(hi.log_magnitude + (-ratio).ln_1p(), hi.sign)
        }
    }
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Remainder of Stirling's series: `ln Γ(x) - [(x - 1/2) ln x - x + ln √(2π)]`.
pub fn stirling_remainder(x: f64) -> f64 {
    if x >= 10.0 {
        let r = 1.0 / x;
        let r2 = r * r;
        r * (1.0 / 12.0
            - r2 * (1.0 / 360.0
                - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 * (1.0 / 1188.0 - r2 * (691.0 / 360_360.0))))))
    } else {
        ln_gamma(x) - ((x - 0.5) * x.ln() - x + LN_SQRT_2PI)
    }
}

/// `ln(1 + e) - e`, accurate for small `e`.
fn log1p_minus(e: f64) -> f64 {
    if e.abs() > 0.1 {
        return e.ln_1p() - e;
    }
    // -e^2/2 + e^3/3 - e^4/4 + ...
    let mut pow = e * e;
    let mut sum = 0.0;
    let mut k = 2.0;
    loop {
        let term = pow / k;
        sum += if (k as u32).is_multiple_of(2) { -term } else { term };
        if term.abs() < 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        pow *= e;
        k += 1.0;
        if k > 60.0 {
            break;
        }
    }
    sum
}

/// `ln B(a, b)` for `a, b > 0`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let s = a + b;
    if a >= 10.0 {
        (a - 0.5) * (a / s).ln() + (b - 0.5) * (-a / s).ln_1p() - 0.5 * s.ln()
            + LN_SQRT_2PI
            + stirling_remainder(a)
            + stirling_remainder(b)
            - stirling_remainder(s)
    } else if b >= 10.0 {
        // ln Γ(b) - ln Γ(a+b) without the cancellation of two large lgammas.
        let ratio = (b - 0.5) * (-a / s).ln_1p() - a * s.ln() + a + stirling_remainder(b) - stirling_remainder(s);
        ln_gamma(a) + ratio
    } else {
        ln_gamma(a) + ln_gamma(b) - ln_gamma(s)
    }
}

/// `ln( x^a y^b / B(a, b) )` with `y = 1 - x` supplied separately so that
/// callers working with the complementary argument keep full precision.
pub(crate) fn ln_beta_kernel(x: f64, y: f64, a: f64, b: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        return f64::NEG_INFINITY;
    }
    if a >= 10.0 && b >= 10.0 {
        // Expand around the saddle x = a/(a+b); the linear terms cancel exactly.
        let s = a + b;
        let d = x * b - y * a;
        a * log1p_minus(d / a) + b * log1p_minus(-d / b) + 0.5 * (a * b / (2.0 * PI * s)).ln()
            - (stirling_remainder(a) + stirling_remainder(b) - stirling_remainder(s))
    } else {
        a * x.ln() + b * y.ln() - ln_beta(a, b)
    }
}

const BETA_CF_MAX_ITER: usize = 200_000;

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::NonConvergence { func: "reg_inc_beta", terms: BETA_CF_MAX_ITER })
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("reg_inc_beta", "x", x));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain("reg_inc_beta", "a", a));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(domain("reg_inc_beta", "b", b));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let y = 1.0 - x;
    if x > (a + 1.0) / (a + b + 2.0) {
        let lead = ln_beta_kernel(y, x, b, a).exp() / b;
        Ok((1.0 - lead * beta_cf(y, b, a)?).clamp(0.0, 1.0))
    } else {
        let lead = ln_beta_kernel(x, y, a, b).exp() / a;
        Ok((lead * beta_cf(x, a, b)?).clamp(0.0, 1.0))
    }
}

/// Gaussian tail probability `Q(x) = 1 - Φ(x)`.
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Rational approximation of Φ⁻¹(p) (Acklam), good to about 1e-9.
fn probit_seed(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const P_LOW: f64 = 0.024_25;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Inverse of [`q_func`]: the `x` with `Q(x) = p`.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("q_inv", "p", p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Newton on Q(x) - p, working on the tail side for accuracy.
    let (target, flip) = if p < 0.5 { (p, false) } else { (1.0 - p, true) };
    let mut x = -probit_seed(target);
    for _ in 0..8 {
        let f = q_func(x) - target;
        let step = f / normal_pdf(x);
        if !step.is_finite() {
            break;
        }
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    if !x.is_finite() || (q_func(x) - target).abs() > 1e-14 * target.max(1e-300) + 1e-300 {
        x = q_inv_bisect(target);
    }
    Ok(if flip { -x } else { x })
}

fn q_inv_bisect(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q_func(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Deviance term `k ln(k/mu) + mu - k`, evaluated without cancellation.
fn poisson_deviance(k: f64, mu: f64) -> f64 {
    if (k - mu).abs() < 0.1 * (k + mu) {
        let v = (k - mu) / (k + mu);
        let mut s = (k - mu) * v;
        let mut ej = 2.0 * k * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        k * (k / mu).ln() + mu - k
    }
}

/// Log of the Poisson pmf `mu^k e^{-mu} / k!`.
pub fn ln_poisson_pmf(k: u64, mu: f64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -mu;
    }
    let kf = k as f64;
    -0.5 * (2.0 * PI * kf).ln() - stirling_remainder(kf) - poisson_deviance(kf, mu)
}

/// Order from which the uniform (Debye) expansion is used.
const DEBYE_MIN_ORDER: u32 = 30;
const DEBYE_TERMS: usize = 12;

/// Coefficients of the Debye polynomials `u_k(t)`, lowest power first.
fn debye_polynomials() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 0..DEBYE_TERMS {
            let u = &polys[k];
            let mut next = vec![0.0; u.len() + 3];
            // 1/2 t^2 (1 - t^2) u'(t)
            for (i, &c) in u.iter().enumerate().skip(1) {
                let d = 0.5 * c * i as f64;
                next[i + 1] += d;
                next[i + 3] -= d;
            }
            // 1/8 ∫_0^t (1 - 5 s^2) u(s) ds
            for (i, &c) in u.iter().enumerate() {
                next[i + 1] += c / (8.0 * (i + 1) as f64);
                next[i + 3] -= 5.0 * c / (8.0 * (i + 3) as f64);
            }
            polys.push(next);
        }
        polys
    })
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn ln_bessel_i_debye(nu: f64, x: f64) -> f64 {
    let r = nu.hypot(x);
    let t = nu / r;
    let inv_nu = 1.0 / nu;
    let mut sum = 0.0;
    let mut scale = 1.0;
    for u in debye_polynomials() {
        sum += horner(u, t) * scale;
        scale *= inv_nu;
    }
    // nu*eta = r + nu ln(x / (nu + r)), with r - x = nu^2 / (x + r).
    let excess = nu * nu / (x + r);
    let log_ratio = if x < nu { (x / (nu + r)).ln() } else { (-(nu + excess) / (nu + r)).ln_1p() };
    x + (excess + nu * log_ratio - 0.5 * (2.0 * PI * r).ln() + sum.ln())
}

fn ln_bessel_i_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = f64::from(2 * k - 1);
        let next = -term * (mu - odd * odd) / (8.0 * f64::from(k) * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    x + (sum.ln() - 0.5 * (2.0 * PI * x).ln())
}

fn ln_bessel_i_series(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut log_scale = 0.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if sum > 1e250 {
            sum *= 1e-250;
            term *= 1e-250;
            log_scale += 250.0 * std::f64::consts::LN_10;
        }
        if term < 1e-17 * sum && k > q.sqrt() {
            break;
        }
    }
    nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) + sum.ln() + log_scale
}

/// Natural log of the modified Bessel function of the first kind `ln I_order(x)`.
///
/// Large orders use the uniform asymptotic expansion; small orders use the
/// ascending series or, for large arguments, the Hankel expansion.
pub fn log_bessel_i(order: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain("log_bessel_i", "x", x));
    }
    if x == 0.0 {
        return Ok(if order == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let nu = f64::from(order);
    Ok(if order >= DEBYE_MIN_ORDER {
        ln_bessel_i_debye(nu, x)
    } else if x > (nu * nu).max(50.0) {
        ln_bessel_i_hankel(nu, x)
    } else {
        ln_bessel_i_series(nu, x)
    })
}

/// `ln 2`, re-exported for callers building chi-square log densities.
pub(crate) const LN2: f64 = LN_2;
