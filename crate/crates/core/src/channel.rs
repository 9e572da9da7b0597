//! Two-path channel: the direct UE→BS link and the UE→BD→BS scattered link.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::lte_grid::SPEED_OF_LIGHT;

pub type Point = [f64; 2];

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn wavelength(carrier_freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_freq_hz
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Positions of base station, UE and backscatter device in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub bs_pos: Point,
    pub ue_pos: Point,
    pub bd_pos: Point,
}

impl LinkGeometry {
    pub fn new(bs_pos: Point, ue_pos: Point, bd_pos: Point) -> Result<Self> {
        let g = Self { bs_pos, ue_pos, bd_pos };
        if g.d_d() == 0.0 {
            return Err(Error::DegenerateGeometry("UE and BS coincide".into()));
        }
        if g.d_s() == 0.0 {
            return Err(Error::DegenerateGeometry("BD coincides with the UE".into()));
        }
        if g.d_b() == 0.0 {
            return Err(Error::DegenerateGeometry("BD coincides with the BS".into()));
        }
        Ok(g)
    }

    /// UE to BS.
    pub fn d_d(&self) -> f64 {
        dist(self.ue_pos, self.bs_pos)
    }

    /// UE to BD.
    pub fn d_s(&self) -> f64 {
        dist(self.ue_pos, self.bd_pos)
    }

    /// BD to BS.
    pub fn d_b(&self) -> f64 {
        dist(self.bd_pos, self.bs_pos)
    }
}

/// Free-space gain `(λ / 4πd) e^{j2πd/λ}`.
pub fn fspl_gain(d: f64, lambda: f64) -> Result<Complex64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(domain("fspl_gain", "d", d));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain("fspl_gain", "lambda", lambda));
    }
    let phase = TAU * (d / lambda).fract();
    Ok(Complex64::from_polar(lambda / (4.0 * PI * d), phase))
}

/// Gains and noise for one link. The reflecting state adds
/// `bd_modulation_depth · h_s · h_b` to the direct gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSet {
    pub h_d: Complex64,
    pub h_s: Complex64,
    pub h_b: Complex64,
    pub bd_modulation_depth: f64,
    pub noise_power: f64,
}

impl ChannelSet {
    pub fn new(h_d: Complex64, h_s: Complex64, h_b: Complex64, noise_power: f64) -> Self {
        Self { h_d, h_s, h_b, bd_modulation_depth: 1.0, noise_power }
    }

    pub fn from_geometry(geom: &LinkGeometry, lambda: f64, noise_power: f64) -> Result<Self> {
        Ok(Self::new(
            fspl_gain(geom.d_d(), lambda)?,
            fspl_gain(geom.d_s(), lambda)?,
            fspl_gain(geom.d_b(), lambda)?,
            noise_power,
        ))
    }

    /// Direct path at `direct_db` and composite scattered path `h_s h_b` at
    /// `scatter_db`, with the scattered path rotated by `scatter_phase_rad`.
    pub fn from_attenuations(direct_db: f64, scatter_db: f64, scatter_phase_rad: f64, noise_power: f64) -> Self {
        Self::new(
            Complex64::new(10f64.powf(direct_db / 20.0), 0.0),
            Complex64::from_polar(10f64.powf(scatter_db / 20.0), scatter_phase_rad),
            Complex64::ONE,
            noise_power,
        )
    }

    /// Replaces the ideal on/off BD with measured reflect and absorb return
    /// losses. The residual reflection of the absorbing state is folded into
    /// the direct path.
    pub fn with_return_loss(mut self, reflect_loss_db: f64, absorb_loss_db: f64) -> Self {
        let a_on = 10f64.powf(-reflect_loss_db / 20.0);
        let a_off = 10f64.powf(-absorb_loss_db / 20.0);
        self.h_d += self.h_s * self.h_b * (self.bd_modulation_depth * a_off);
        self.bd_modulation_depth *= a_on - a_off;
        self
    }

    /// Sets the noise so that `|h_d|²/σ² = gamma` (linear).
    pub fn with_lte_snr(mut self, gamma: f64) -> Self {
        self.noise_power = self.h_d.norm_sqr() / gamma;
        self
    }

    pub fn with_noise_power(mut self, noise_power: f64) -> Self {
        self.noise_power = noise_power;
        self
    }

    pub fn h_on(&self) -> Complex64 {
        self.h_d + self.h_s * self.h_b * self.bd_modulation_depth
    }

    pub fn h_off(&self) -> Complex64 {
        self.h_d
    }

    pub fn h_on_sq(&self) -> f64 {
        self.h_on().norm_sqr()
    }

    pub fn h_off_sq(&self) -> f64 {
        self.h_off().norm_sqr()
    }

    /// `|h_on| - |h_off|`; its sign tells the detectors which state is brighter.
    pub fn delta_h(&self) -> f64 {
        self.h_on().norm() - self.h_off().norm()
    }
}

/// Gain seen in BD state `b` (`-1` absorbing, `+1` reflecting).
pub fn composite_gain(ch: &ChannelSet, b: i8) -> Result<Complex64> {
    match b {
        -1 => Ok(ch.h_off()),
        1 => Ok(ch.h_on()),
        _ => Err(domain("composite_gain", "b", f64::from(b))),
    }
}

/// Complex scatter-to-direct ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterRatio {
    pub iota: Complex64,
}

impl ScatterRatio {
    /// `|1 + ι|²`, the only quantity the BER depends on at fixed LTE SNR.
    pub fn gain_ratio(&self) -> f64 {
        (Complex64::ONE + self.iota).norm_sqr()
    }
}

/// `ι = (λ/4π) d_d/(d_s d_b) · exp[j2π(d_d - d_b - d_s)/λ]`.
pub fn scatter_ratio(geom: &LinkGeometry, lambda: f64) -> Result<ScatterRatio> {
    let (dd, ds, db) = (geom.d_d(), geom.d_s(), geom.d_b());
    if dd == 0.0 || ds == 0.0 || db == 0.0 {
        return Err(Error::DegenerateGeometry(format!("zero link distance (d_d={dd}, d_s={ds}, d_b={db})")));
    }
    if !(lambda > 0.0) {
        return Err(domain("scatter_ratio", "lambda", lambda));
    }
    let mag = lambda / (4.0 * PI) * dd / (ds * db);
    let phase = TAU * ((dd - db - ds) / lambda).fract();
    Ok(ScatterRatio { iota: Complex64::from_polar(mag, phase) })
}

/// LTE SNR `γ = |h_d|²/σ²` (linear).
pub fn lte_snr(ch: &ChannelSet) -> f64 {
    ch.h_off_sq() / ch.noise_power
}

/// SNR per backscatter bit:
/// `γ_b = N M (|h_on|² - |h_off|²)² / (8σ²(σ² + |h_on|² + |h_off|²))`.
pub fn snr_per_bit(ch: &ChannelSet, n_chips: usize, m_sc: usize) -> f64 {
    snr_per_bit_from_powers(ch.h_on_sq(), ch.h_off_sq(), ch.noise_power, n_chips, m_sc)
}

pub fn snr_per_bit_from_powers(h_on_sq: f64, h_off_sq: f64, noise_power: f64, n_chips: usize, m_sc: usize) -> f64 {
    let diff = h_on_sq - h_off_sq;
    (n_chips * m_sc) as f64 * diff * diff / (8.0 * noise_power * (noise_power + h_on_sq + h_off_sq))
}

/// Noise power that yields a given SNR per bit (inverse of [`snr_per_bit_from_powers`]).
pub fn noise_for_snr_per_bit(h_on_sq: f64, h_off_sq: f64, n_chips: usize, m_sc: usize, gamma_b: f64) -> Result<f64> {
    if !(gamma_b > 0.0 && gamma_b.is_finite()) {
        return Err(domain("noise_for_snr_per_bit", "gamma_b", gamma_b));
    }
    let diff = h_on_sq - h_off_sq;
    if diff == 0.0 {
        return Err(Error::InvalidConfig("backscatter path carries no energy difference".into()));
    }
    let s = h_on_sq + h_off_sq;
    let nm = (n_chips * m_sc) as f64;
    // 8 γ_b σ⁴ + 8 γ_b S σ² − N M Δ² = 0; the stable form of the positive root.
    let c = nm * diff * diff;
    let disc = (64.0 * gamma_b * gamma_b * s * s + 32.0 * gamma_b * c).sqrt();
    Ok(2.0 * c / (8.0 * gamma_b * s + disc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LAMBDA_782: f64 = SPEED_OF_LIGHT / 782e6;

    #[test]
    fn fspl_reference_values() {
        let unit = fspl_gain(LAMBDA_782 / (4.0 * PI), LAMBDA_782).unwrap();
        assert!((unit.norm() - 1.0).abs() < 1e-15);
        let h50 = fspl_gain(50.0, LAMBDA_782).unwrap();
        let h100 = fspl_gain(100.0, LAMBDA_782).unwrap();
        assert!((h50.norm() / h100.norm() - 2.0).abs() < 1e-14);
        let want = (LAMBDA_782 / (4.0 * PI * 50.0)).powi(2);
        assert!((h50.norm_sqr() - want).abs() < 1e-20);
        assert!((to_db(h50.norm_sqr()) + 64.3).abs() < 0.05);
        assert!(fspl_gain(0.0, 1.0).is_err());
    }

    #[test]
    fn composite_states() {
        let ch = ChannelSet::from_attenuations(-52.2, -82.6, 0.4, 1e-6);
        assert_eq!(composite_gain(&ch, -1).unwrap(), ch.h_d);
        assert_eq!(composite_gain(&ch, 1).unwrap(), ch.h_d + ch.h_s * ch.h_b);
        assert!(composite_gain(&ch, 0).is_err());
        let dead = ChannelSet { h_s: Complex64::ZERO, ..ch };
        assert_eq!(composite_gain(&dead, 1).unwrap(), composite_gain(&dead, -1).unwrap());
        assert_eq!(snr_per_bit(&dead, 4, 288), 0.0);
    }

    #[test]
    fn snr_definitions() {
        let ch = ChannelSet::from_attenuations(-52.2, -82.6, 0.0, 1.0).with_lte_snr(10.0);
        assert!((lte_snr(&ch) - 10.0).abs() < 1e-12);
        let g4 = snr_per_bit(&ch, 4, 288);
        assert!((snr_per_bit(&ch, 8, 288) / g4 - 2.0).abs() < 1e-14);
        let noise = noise_for_snr_per_bit(ch.h_on_sq(), ch.h_off_sq(), 4, 288, g4).unwrap();
        assert!((noise / ch.noise_power - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scatter_ratio_limits() {
        let g = LinkGeometry::new([50.0, 0.0], [0.0, 0.0], [20.0, 0.0]).unwrap();
        let r = scatter_ratio(&g, LAMBDA_782).unwrap();
        assert!(r.iota.arg().abs() < 1e-12);
        let far = LinkGeometry::new([50.0, 0.0], [0.0, 0.0], [0.0, 1e9]).unwrap();
        assert!(scatter_ratio(&far, LAMBDA_782).unwrap().iota.norm() < 1e-15);
        assert!(LinkGeometry::new([1.0, 0.0], [0.0, 0.0], [0.0, 0.0]).is_err());
        assert!(LinkGeometry::new([1.0, 0.0], [0.0, 0.0], [1.0, 0.0]).is_err());
    }

    #[test]
    fn return_loss_folding() {
        let ideal = ChannelSet::from_attenuations(-52.2, -82.6, 0.0, 1.0);
        let ch = ideal.with_return_loss(0.5, 23.0);
        let a_on = 10f64.powf(-0.5 / 20.0);
        let a_off = 10f64.powf(-23.0 / 20.0);
        let s = ideal.h_s * ideal.h_b;
        assert!((ch.h_off() - (ideal.h_d + s * a_off)).norm() < 1e-18);
        assert!((ch.h_on() - (ideal.h_d + s * a_on)).norm() < 1e-18);
    }

    proptest! {
        #[test]
        fn on_off_power_difference_matches_iota(
            bx in -30.0f64..30.0, by in 0.05f64..30.0, bsx in 10.0f64..200.0, f in 0.3e9f64..6e9
        ) {
            let lambda = wavelength(f);
            let g = LinkGeometry::new([bsx, 0.0], [0.0, 0.0], [bx, by]).unwrap();
            let ch = ChannelSet::from_geometry(&g, lambda, 1.0).unwrap();
            let r = scatter_ratio(&g, lambda).unwrap();
            let lhs = ch.h_on_sq() - ch.h_off_sq();
            let rhs = ch.h_off_sq() * (r.gain_ratio() - 1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(ch.h_off_sq() * 1e-6));
            // |1+ι|² closed-form expansion.
            let k = g.d_d() / (g.d_s() * g.d_b());
            let expand = 1.0 + lambda / (2.0 * PI) * k * (TAU * (g.d_d() - g.d_b() - g.d_s()) / lambda).cos()
                + (lambda / (4.0 * PI) * k).powi(2);
            prop_assert!((expand - r.gain_ratio()).abs() <= 1e-9 * r.gain_ratio());
        }

        #[test]
        fn scatter_ratio_scale_invariant(bx in -30.0f64..30.0, by in 0.05f64..30.0, s in 0.1f64..10.0) {
            let lambda = 0.37;
            let g1 = LinkGeometry::new([50.0, 0.0], [0.0, 0.0], [bx, by]).unwrap();
            let g2 = LinkGeometry::new([50.0 * s, 0.0], [0.0, 0.0], [bx * s, by * s]).unwrap();
            let a = scatter_ratio(&g1, lambda).unwrap().iota;
            let b = scatter_ratio(&g2, lambda * s).unwrap().iota;
            prop_assert!((a - b).norm() <= 1e-8 * a.norm().max(1e-12));
        }

        #[test]
        fn fspl_phase_periodic(d in 1.0f64..500.0) {
            let lambda = LAMBDA_782;
            let a = fspl_gain(d, lambda).unwrap();
            let b = fspl_gain(d + lambda, lambda).unwrap();
            let dphi = (a.arg() - b.arg()).rem_euclid(TAU);
            prop_assert!(dphi.min(TAU - dphi) < 1e-8);
            prop_assert!((a.norm() / b.norm() - (d + lambda) / d).abs() < 1e-12);
        }
    }
}
