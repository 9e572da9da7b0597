//! Error probabilities of the correlation receiver.
//!
//! With `y+` and `y-` the energies collected on the chips where `s0` is
//! reflecting and absorbing, the normalized sums are independent noncentral
//! chi-square variables with `ν = M N` degrees of freedom and noncentralities
//! `λ = M N |h|²/σ²`, so their ratio `ξ = y+/y-` is doubly noncentral F. The
//! exact BER is `Pr(s0) Pr(ξ ≤ 1 | s0) + Pr(s1) Pr(ξ > 1 | s1)`.

use num_complex::Complex64;

use crate::channel::snr_per_bit_from_powers;
use crate::error::{domain, Error, Result};
use crate::specfun::{ln_beta_kernel, ln_poisson_pmf, q_func, q_inv, reg_inc_beta};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams {
    pub m_sc: usize,
    /// Chips per symbol that differ between the two waveforms.
    pub n_chips: usize,
    pub h_on_sq: f64,
    pub h_off_sq: f64,
    pub noise_power: f64,
    pub prior_s0: f64,
}

impl DetectionParams {
    pub fn new(m_sc: usize, n_chips: usize, h_on_sq: f64, h_off_sq: f64, noise_power: f64) -> Result<Self> {
        let p = Self { m_sc, n_chips, h_on_sq, h_off_sq, noise_power, prior_s0: 0.5 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_prior(mut self, prior_s0: f64) -> Result<Self> {
        self.prior_s0 = prior_s0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_sc == 0 || self.n_chips == 0 || !(self.m_sc * self.n_chips).is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "M N/2 must be a positive integer (M={}, N={})",
                self.m_sc, self.n_chips
            )));
        }
        if !(self.h_on_sq >= 0.0 && self.h_on_sq.is_finite()) {
            return Err(domain("DetectionParams", "h_on_sq", self.h_on_sq));
        }
        if !(self.h_off_sq >= 0.0 && self.h_off_sq.is_finite()) {
            return Err(domain("DetectionParams", "h_off_sq", self.h_off_sq));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(domain("DetectionParams", "noise_power", self.noise_power));
        }
        if !(0.0..=1.0).contains(&self.prior_s0) {
            return Err(domain("DetectionParams", "prior_s0", self.prior_s0));
        }
        Ok(())
    }

    /// Degrees of freedom of each of `y+`, `y-`.
    pub fn dof(&self) -> u64 {
        (self.m_sc * self.n_chips) as u64
    }

    fn noncentrality(&self, h_sq: f64) -> f64 {
        (self.m_sc * self.n_chips) as f64 * h_sq / self.noise_power
    }

    pub fn lambda_on(&self) -> f64 {
        self.noncentrality(self.h_on_sq)
    }

    pub fn lambda_off(&self) -> f64 {
        self.noncentrality(self.h_off_sq)
    }

    pub fn snr_per_bit(&self) -> f64 {
        snr_per_bit_from_powers(self.h_on_sq, self.h_off_sq, self.noise_power, self.n_chips, self.m_sc)
    }
}

/// Truncation control for the Poisson double series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Poisson mass allowed outside the summation window, per index.
    pub rel_tol: f64,
    /// Largest window width allowed per index.
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_terms: 100_000 }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(domain("SeriesControl", "rel_tol", self.rel_tol));
        }
        if self.max_terms == 0 {
            return Err(domain("SeriesControl", "max_terms", 0.0));
        }
        Ok(())
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Poisson window `[lo, hi]` around the mode holding at least `1 - tol` of the mass,
/// with the weights `P(k; mu)` for each `k` in it.
fn poisson_window(mu: f64, ctl: &SeriesControl) -> Result<(u64, Vec<f64>)> {
    if mu == 0.0 {
        return Ok((0, vec![1.0]));
    }
    let mode = mu.floor() as u64;
    let mut lo = mode;
    let mut hi = mode;
    let mut left: Vec<f64> = Vec::new();
    let mut right: Vec<f64> = vec![ln_poisson_pmf(mode, mu).exp()];
    let mut mass = KahanSum::default();
    mass.add(right[0]);
    let mut next_lo = if lo > 0 { ln_poisson_pmf(lo - 1, mu).exp() } else { 0.0 };
    let mut next_hi = ln_poisson_pmf(hi + 1, mu).exp();
    while mass.total() < 1.0 - ctl.rel_tol {
        if (hi - lo) as usize + 1 >= ctl.max_terms {
            return Err(Error::NonConvergence { func: "doubly_noncentral_f_cdf", terms: ctl.max_terms });
        }
        if next_hi >= next_lo {
            hi += 1;
            right.push(next_hi);
            mass.add(next_hi);
            next_hi = ln_poisson_pmf(hi + 1, mu).exp();
        } else {
            lo -= 1;
            left.push(next_lo);
            mass.add(next_lo);
            next_lo = if lo > 0 { ln_poisson_pmf(lo - 1, mu).exp() } else { 0.0 };
        }
        if next_hi == 0.0 && next_lo == 0.0 {
            break;
        }
    }
    left.reverse();
    left.extend(right);
    Ok((lo, left))
}

/// Value carried either as a plain double or, while it would underflow, as its log.
#[derive(Debug, Clone, Copy)]
struct Term {
    ln: f64,
}

impl Term {
    const SWITCH: f64 = -700.0;

    fn value(self) -> f64 {
        if self.ln < Self::SWITCH {
            0.0
        } else {
            self.ln.exp()
        }
    }
}

/// `Pr(ξ ≤ x)` for `ξ = (χ'²_{ν1}(λ1)/ν1) / (χ'²_{ν2}(λ2)/ν2)`.
///
/// Uses the Poisson mixture of regularized incomplete beta functions at
/// `p = ν1 x / (ν1 x + ν2)`. The table of `I_p(ν1/2 + j, ν2/2 + k)` is filled
/// from its smallest corner with upward recurrences only, so every entry
/// keeps full relative precision.
pub fn doubly_noncentral_f_cdf(x: f64, nu1: u64, nu2: u64, lam1: f64, lam2: f64, ctl: &SeriesControl) -> Result<f64> {
    const FUNC: &str = "doubly_noncentral_f_cdf";
    ctl.validate()?;
    if !(x > 0.0) || x.is_nan() {
        return Err(domain(FUNC, "x", x));
    }
    if nu1 == 0 {
        return Err(domain(FUNC, "nu1", 0.0));
    }
    if nu2 == 0 {
        return Err(domain(FUNC, "nu2", 0.0));
    }
    if !(lam1 >= 0.0 && lam1.is_finite()) {
        return Err(domain(FUNC, "lam1", lam1));
    }
    if !(lam2 >= 0.0 && lam2.is_finite()) {
        return Err(domain(FUNC, "lam2", lam2));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let (n1, n2) = (nu1 as f64, nu2 as f64);
    let num = n1 * x;
    let p = num / (num + n2);
    let q = n2 / (num + n2);

    let (j_lo, wj) = poisson_window(0.5 * lam1, ctl)?;
    let (k_lo, wk) = poisson_window(0.5 * lam2, ctl)?;
    let a_of = |j: usize| 0.5 * n1 + (j_lo + j as u64) as f64;
    let b_lo = 0.5 * n2 + k_lo as f64;
    let j_last = wj.len() - 1;

    // Column k = k_lo, walking j downward: I(a-1, b) = I(a, b) + D(a-1, b),
    // D(a', b) = p^a' q^b / (a' B(a', b)), D(a'-1)/D(a') = a' / ((a' + b - 1) p).
    let mut column = vec![0.0; wj.len()];
    column[j_last] = reg_inc_beta(p, a_of(j_last), b_lo)?;
    if j_last > 0 {
        let a1 = a_of(j_last) - 1.0;
        let mut d = Term { ln: ln_beta_kernel(p, q, a1, b_lo) - a1.ln() };
        let ln_p = p.ln();
        let mut acc = column[j_last];
        for j in (0..j_last).rev() {
            acc += d.value();
            column[j] = acc;
            // Step D from a' = a_of(j) to a' - 1.
            let ap = a_of(j);
            d.ln += (ap / (ap + b_lo - 1.0)).ln() - ln_p;
        }
    }

    // Each row: walk k upward, I(a, b+1) = I(a, b) + T(a, b),
    // T(a, b) = p^a q^b / (b B(a, b)), T(a, b+1)/T(a, b) = q (a + b)/(b + 1).
    let mut total = KahanSum::default();
    let ln_q = q.ln();
    for (j, &w_j) in wj.iter().enumerate() {
        if w_j == 0.0 {
            continue;
        }
        let a = a_of(j);
        let mut b = b_lo;
        let mut value = column[j];
        let mut t_ln = ln_beta_kernel(p, q, a, b) - b.ln();
        let mut row = KahanSum::default();
        for &w_k in &wk {
            row.add(w_k * value);
            let t = if t_ln < Term::SWITCH { 0.0 } else { t_ln.exp() };
            value = (value + t).min(1.0);
            t_ln += ((a + b) / (b + 1.0)).ln() + ln_q;
            b += 1.0;
        }
        total.add(w_j * row.total());
    }
    Ok(total.total().clamp(0.0, 1.0))
}

/// `Pr(ξ > x)`, evaluated through the reciprocal ratio so small tails keep
/// relative precision.
pub fn doubly_noncentral_f_sf(x: f64, nu1: u64, nu2: u64, lam1: f64, lam2: f64, ctl: &SeriesControl) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(domain("doubly_noncentral_f_sf", "x", x));
    }
    doubly_noncentral_f_cdf(1.0 / x, nu2, nu1, lam2, lam1, ctl)
}

/// `(Pr(error | s0), Pr(error | s1))` of the correlation receiver.
pub fn conditional_error_probs(p: &DetectionParams, ctl: &SeriesControl) -> Result<(f64, f64)> {
    p.validate()?;
    if p.h_on_sq == p.h_off_sq {
        return Ok((0.5, 0.5));
    }
    let nu = p.dof();
    // The detector orients itself by the sign of Δh, so the brighter state
    // always plays the role of "reflecting".
    let (bright, dark) =
        if p.h_on_sq > p.h_off_sq { (p.lambda_on(), p.lambda_off()) } else { (p.lambda_off(), p.lambda_on()) };
    let e0 = doubly_noncentral_f_cdf(1.0, nu, nu, bright, dark, ctl)?;
    let e1 = doubly_noncentral_f_sf(1.0, nu, nu, dark, bright, ctl)?;
    Ok((e0, e1))
}

pub fn exact_ber(p: &DetectionParams, ctl: &SeriesControl) -> Result<f64> {
    let (e0, e1) = conditional_error_probs(p, ctl)?;
    Ok(p.prior_s0 * e0 + (1.0 - p.prior_s0) * e1)
}

/// `Q(√(2γ_b))`, the Gaussian approximation of the exact BER.
pub fn gaussian_ber(p: &DetectionParams) -> f64 {
    q_func((2.0 * p.snr_per_bit()).sqrt())
}

/// Coherent FSK: `Q(√γ_b)`.
pub fn fsk_coherent_ber(gamma_b: f64) -> f64 {
    q_func(gamma_b.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BerEngine {
    Exact,
    #[default]
    Gaussian,
}

impl std::str::FromStr for BerEngine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(BerEngine::Exact),
            "gaussian" => Ok(BerEngine::Gaussian),
            other => Err(Error::InvalidConfig(format!("unknown engine '{other}'"))),
        }
    }
}

impl std::fmt::Display for BerEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BerEngine::Exact => "exact",
            BerEngine::Gaussian => "gaussian",
        })
    }
}

/// BER as a function of the scatter ratio at LTE SNR `gamma` (linear).
pub fn ber_vs_iota(
    iota: Complex64,
    gamma: f64,
    m_sc: usize,
    n_chips: usize,
    ctl: &SeriesControl,
    engine: BerEngine,
) -> Result<f64> {
    if !(iota.re.is_finite() && iota.im.is_finite()) {
        return Err(domain("ber_vs_iota", "iota", iota.norm()));
    }
    ber_vs_gain_ratio((Complex64::ONE + iota).norm_sqr(), gamma, m_sc, n_chips, ctl, engine)
}

/// Same as [`ber_vs_iota`] but keyed by `|1 + ι|²` directly.
pub fn ber_vs_gain_ratio(
    gain_ratio: f64,
    gamma: f64,
    m_sc: usize,
    n_chips: usize,
    ctl: &SeriesControl,
    engine: BerEngine,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(domain("ber_vs_iota", "gamma", gamma));
    }
    let p = DetectionParams::new(m_sc, n_chips, gamma * gain_ratio, gamma, 1.0)?;
    match engine {
        BerEngine::Exact => exact_ber(&p, ctl),
        BerEngine::Gaussian => Ok(gaussian_ber(&p)),
    }
}

/// `|1 + ι|²` (constructive branch) at which the Gaussian BER equals `ber_target`.
pub fn iota_magnitude_for_target(ber_target: f64, gamma: f64, m_sc: usize, n_chips: usize) -> Result<f64> {
    if !(ber_target > 0.0 && ber_target <= 0.5) {
        return Err(domain("iota_magnitude_for_target", "ber_target", ber_target));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(domain("iota_magnitude_for_target", "gamma", gamma));
    }
    let q = q_inv(ber_target)?;
    let nm = (m_sc * n_chips) as f64;
    Ok(1.0 + 2.0 * q * q / (nm * gamma) + 2.0 * q / (nm.sqrt() * gamma) * (q * q / nm + 1.0 + 2.0 * gamma).sqrt())
}
