//! SRS resource grid and the per-symbol energy statistic.
//!
//! Only three properties of the sounding reference signal matter to the
//! backscatter receiver: every resource element has unit modulus, every SRS
//! symbol carries the same number of subcarriers, and symbols arrive at a
//! fixed period. The REs are therefore drawn with uniformly random phases.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{domain, Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// LTE numerology and SRS schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrsConfig {
    pub num_rb: u32,
    pub subcarrier_spacing_hz: f64,
    /// SRS subcarriers per SRS symbol.
    pub m_sc: usize,
    /// SRS period in seconds; the backscatter chip rate is its inverse.
    pub t_srs_s: f64,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
}

impl Default for SrsConfig {
    fn default() -> Self {
        default_config()
    }
}

/// 10 MHz carrier, 50 RBs at 15 kHz, 288 SRS subcarriers every 2 ms, 782 MHz uplink.
pub fn default_config() -> SrsConfig {
    SrsConfig {
        num_rb: 50,
        subcarrier_spacing_hz: 15e3,
        m_sc: 288,
        t_srs_s: 2e-3,
        carrier_freq_hz: 782e6,
        bandwidth_hz: 10e6,
    }
}

impl SrsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_sc < 24 {
            return Err(Error::InvalidConfig(format!("m_sc must be at least 24, got {}", self.m_sc)));
        }
        for (name, v) in [
            ("t_srs_s", self.t_srs_s),
            ("subcarrier_spacing_hz", self.subcarrier_spacing_hz),
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("bandwidth_hz", self.bandwidth_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.num_rb == 0 {
            return Err(Error::InvalidConfig("num_rb must be positive".into()));
        }
        Ok(())
    }

    /// Sampling rate seen by the backscatter receiver, one sample per SRS symbol.
    pub fn chip_rate_hz(&self) -> f64 {
        1.0 / self.t_srs_s
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }
}

/// The transmitted REs of one SRS symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SrsSymbol {
    pub res: Vec<Complex64>,
    pub symbol_index: u64,
}

/// Received energy `y[l] = Σ_k |S_r[k; l]|²` of one SRS symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub y: f64,
    pub noise_power: f64,
    pub symbol_index: u64,
}

impl EnergySample {
    /// `2y / σ²`, the chi-square distributed quantity the detectors work on.
    pub fn normalized(&self) -> f64 {
        2.0 * self.y / self.noise_power
    }
}

pub fn gen_srs_symbol<R: Rng + ?Sized>(cfg: &SrsConfig, l: u64, rng: &mut R) -> SrsSymbol {
    let res = (0..cfg.m_sc)
        .map(|_| {
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            Complex64::new(phase.cos(), phase.sin())
        })
        .collect();
    SrsSymbol { res, symbol_index: l }
}

fn check_noise(noise_power: f64) -> Result<()> {
    if noise_power > 0.0 && noise_power.is_finite() {
        Ok(())
    } else {
        Err(domain("lte_grid", "noise_power", noise_power))
    }
}

/// Passes one symbol through a flat channel `h` and sums the received RE powers.
pub fn receive_symbol<R: Rng + ?Sized>(
    sym: &SrsSymbol,
    h: Complex64,
    noise_power: f64,
    rng: &mut R,
) -> Result<EnergySample> {
    check_noise(noise_power)?;
    let scale = (0.5 * noise_power).sqrt();
    let y = sym
        .res
        .iter()
        .map(|&s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (h * s + Complex64::new(re * scale, im * scale)).norm_sqr()
        })
        .sum();
    Ok(EnergySample { y, noise_power, symbol_index: sym.symbol_index })
}

/// Energy of a symbol with the noise switched off.
pub fn noiseless_energy(sym: &SrsSymbol, h: Complex64) -> f64 {
    sym.res.iter().map(|&s| (h * s).norm_sqr()).sum()
}

/// Sampler for `χ'²_k(λ)`, split as `(Z + √λ)² + χ²_{k-1}`.
#[derive(Debug, Clone, Copy)]
pub struct NoncentralChiSquared {
    sqrt_lambda: f64,
    rest: Option<ChiSquared<f64>>,
}

impl NoncentralChiSquared {
    pub fn new(dof: usize, noncentrality: f64) -> Result<Self> {
        if dof == 0 {
            return Err(domain("NoncentralChiSquared", "dof", 0.0));
        }
        if !(noncentrality >= 0.0 && noncentrality.is_finite()) {
            return Err(domain("NoncentralChiSquared", "noncentrality", noncentrality));
        }
        let rest = if dof > 1 {
            Some(ChiSquared::new((dof - 1) as f64).map_err(|_| domain("NoncentralChiSquared", "dof", dof as f64))?)
        } else {
            None
        };
        Ok(Self { sqrt_lambda: noncentrality.sqrt(), rest })
    }
}

impl Distribution<f64> for NoncentralChiSquared {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let lead = (z + self.sqrt_lambda).powi(2);
        match &self.rest {
            Some(c) => lead + c.sample(rng),
            None => lead,
        }
    }
}

/// Draws `y` straight from its law `2y/σ² ~ χ'²_{2M}(2M|h|²/σ²)` without building REs.
pub fn energy_statistic_direct<R: Rng + ?Sized>(
    h: Complex64,
    cfg: &SrsConfig,
    noise_power: f64,
    rng: &mut R,
) -> Result<EnergySample> {
    check_noise(noise_power)?;
    let dist = energy_law(cfg.m_sc, h.norm_sqr(), noise_power)?;
    Ok(EnergySample { y: 0.5 * noise_power * dist.sample(rng), noise_power, symbol_index: 0 })
}

/// Law of the normalized statistic `2y/σ²` for `m_sc` REs and channel power `h_sq`.
pub fn energy_law(m_sc: usize, h_sq: f64, noise_power: f64) -> Result<NoncentralChiSquared> {
    check_noise(noise_power)?;
    NoncentralChiSquared::new(2 * m_sc, 2.0 * m_sc as f64 * h_sq / noise_power)
}

/// Mean `M(σ² + |h|²)` and variance `M(σ⁴ + 2σ²|h|²)` of `y`.
pub fn energy_moments(m_sc: usize, h_sq: f64, noise_power: f64) -> (f64, f64) {
    let m = m_sc as f64;
    (m * (noise_power + h_sq), m * noise_power * (noise_power + 2.0 * h_sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_numerology() {
        let cfg = default_config();
        assert_eq!(cfg.m_sc, 288);
        assert_eq!(cfg.num_rb, 50);
        assert!((cfg.chip_rate_hz() - 500.0).abs() < 1e-9);
        assert_eq!(cfg.carrier_freq_hz, 782e6);
        cfg.validate().unwrap();
        let bad = SrsConfig { m_sc: 12, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn symbols_are_unit_modulus_and_seeded() {
        let cfg = default_config();
        let a = gen_srs_symbol(&cfg, 3, &mut ChaCha8Rng::seed_from_u64(9));
        let b = gen_srs_symbol(&cfg, 3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(a.res.len(), 288);
        assert!(a.res.iter().all(|s| (s.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn noiseless_energy_is_parseval() {
        let cfg = default_config();
        let sym = gen_srs_symbol(&cfg, 0, &mut ChaCha8Rng::seed_from_u64(1));
        let h = Complex64::new(0.3, -0.7);
        let y = noiseless_energy(&sym, h);
        assert!((y - 288.0 * h.norm_sqr()).abs() < 1e-12 * y);
    }

    #[test]
    fn rejects_bad_noise() {
        let cfg = default_config();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sym = gen_srs_symbol(&cfg, 0, &mut rng);
        assert!(receive_symbol(&sym, Complex64::ONE, 0.0, &mut rng).is_err());
        assert!(energy_statistic_direct(Complex64::ONE, &cfg, -1.0, &mut rng).is_err());
    }

    #[test]
    fn central_mean_per_re_path() {
        let cfg = default_config();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let mut acc = 0.0;
        for l in 0..n {
            let sym = gen_srs_symbol(&cfg, l, &mut rng);
            acc += receive_symbol(&sym, Complex64::ZERO, 1.0, &mut rng).unwrap().y;
        }
        let mean = acc / n as f64;
        assert!((mean / 288.0 - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn direct_path_moments() {
        let cfg = default_config();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (h, s2) = (Complex64::new(0.8, 0.6), 0.5);
        let n = 200_000;
        let ys: Vec<f64> = (0..n).map(|_| energy_statistic_direct(h, &cfg, s2, &mut rng).unwrap().y).collect();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let (m, v) = energy_moments(288, 1.0, s2);
        assert!((mean / m - 1.0).abs() < 0.01);
        assert!((var / v - 1.0).abs() < 0.03);
    }
}
