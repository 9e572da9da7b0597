//! Symbol detectors on per-chip energy samples.
//!
//! Every detector scores both hypotheses and decides `H1` only when its
//! score is strictly larger, so exact ties resolve to `H0`. Scores are
//! computed on the normalized statistic `z = 2y/σ²`, whose law per chip is
//! `χ'²_{2M}(λ)` with `λ = 2M|h|²/σ²`.

use super::{bits_from_waveforms, SymbolAlphabet};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::specfun::{ln_gamma, log_bessel_i, LN2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    /// Exact likelihood ratio with the noncentral chi-square density.
    BesselMap,
    /// Correlation of `√z` with the chip pattern.
    SquareRoot,
    /// Correlation of `z` with the chip pattern.
    Correlation,
    /// Gaussian likelihood ratio on the chip energies.
    Power,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] =
        [DetectorKind::BesselMap, DetectorKind::SquareRoot, DetectorKind::Correlation, DetectorKind::Power];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::BesselMap => "bessel_map",
            DetectorKind::SquareRoot => "square_root",
            DetectorKind::Correlation => "correlation",
            DetectorKind::Power => "power",
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "bessel_map" | "bessel" | "map" => Ok(DetectorKind::BesselMap),
            "square_root" | "sqrt" => Ok(DetectorKind::SquareRoot),
            "correlation" | "corr" => Ok(DetectorKind::Correlation),
            "power" => Ok(DetectorKind::Power),
            other => Err(Error::InvalidConfig(format!("unknown detector '{other}'"))),
        }
    }
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Genie channel knowledge handed to the detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverContext {
    pub h_on_sq: f64,
    pub h_off_sq: f64,
    pub delta_h: f64,
    pub noise_power: f64,
    pub m_sc: usize,
}

impl ReceiverContext {
    pub fn new(ch: &ChannelSet, m_sc: usize) -> Self {
        Self {
            h_on_sq: ch.h_on_sq(),
            h_off_sq: ch.h_off_sq(),
            delta_h: ch.delta_h(),
            noise_power: ch.noise_power,
            m_sc,
        }
    }

    /// Chip noncentrality `2M|h|²/σ²` for state `+1` (on) or `-1` (off).
    pub fn noncentrality(&self, chip: i8) -> f64 {
        let h_sq = if chip > 0 { self.h_on_sq } else { self.h_off_sq };
        2.0 * self.m_sc as f64 * h_sq / self.noise_power
    }

    fn sign_dh(&self) -> f64 {
        if self.delta_h < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// `ln p(z)` for `z ~ χ'²_{2M}(λ)`.
pub fn chi_square_log_pdf(z: f64, m_sc: usize, lambda: f64) -> f64 {
    let m = m_sc as f64;
    if z < 0.0 {
        return f64::NEG_INFINITY;
    }
    if lambda == 0.0 {
        if z == 0.0 {
            return if m_sc == 1 { -LN2 } else { f64::NEG_INFINITY };
        }
        return (m - 1.0) * z.ln() - 0.5 * z - m * LN2 - ln_gamma(m);
    }
    if z == 0.0 {
        return if m_sc == 1 { -LN2 - 0.5 * lambda } else { f64::NEG_INFINITY };
    }
    let bessel = log_bessel_i((m_sc - 1) as u32, (lambda * z).sqrt()).expect("argument is non-negative");
    -LN2 - 0.5 * (z + lambda) + 0.5 * (m - 1.0) * (z / lambda).ln() + bessel
}

/// Precomputed per-chip constants for one context.
struct Prepared {
    scale: f64,
    sign_dh: f64,
    lambda_on: f64,
    lambda_off: f64,
    m: f64,
}

impl Prepared {
    fn new(ctx: &ReceiverContext) -> Self {
        Self {
            scale: 2.0 / ctx.noise_power,
            sign_dh: ctx.sign_dh(),
            lambda_on: ctx.noncentrality(1),
            lambda_off: ctx.noncentrality(-1),
            m: ctx.m_sc as f64,
        }
    }

    fn lambda(&self, chip: i8) -> f64 {
        if chip > 0 {
            self.lambda_on
        } else {
            self.lambda_off
        }
    }

    fn score(&self, kind: DetectorKind, z: &[f64], s: &[i8], ctx: &ReceiverContext) -> f64 {
        match kind {
            DetectorKind::Correlation => self.sign_dh * z.iter().zip(s).map(|(&z, &c)| f64::from(c) * z).sum::<f64>(),
            DetectorKind::SquareRoot => {
                self.sign_dh * z.iter().zip(s).map(|(&z, &c)| f64::from(c) * z.sqrt()).sum::<f64>()
            }
            DetectorKind::Power => z
                .iter()
                .zip(s)
                .map(|(&z, &c)| {
                    // z has mean 2M + λ and variance 4(M + λ).
                    let lam = self.lambda(c);
                    let mean = 2.0 * self.m + lam;
                    let var = 4.0 * (self.m + lam);
                    -(z - mean).powi(2) / (2.0 * var) - 0.5 * var.ln()
                })
                .sum(),
            DetectorKind::BesselMap => {
                z.iter().zip(s).map(|(&z, &c)| chi_square_log_pdf(z, ctx.m_sc, self.lambda(c))).sum()
            }
        }
    }
}

/// Scores `(H0, H1)` of one detector on one symbol's raw energies `y`.
pub fn detector_metrics(
    kind: DetectorKind,
    y: &[f64],
    alphabet: &SymbolAlphabet,
    ctx: &ReceiverContext,
) -> Result<(f64, f64)> {
    if y.len() != alphabet.n_chips {
        return Err(Error::LengthMismatch { expected: alphabet.n_chips, got: y.len() });
    }
    let prep = Prepared::new(ctx);
    let z: Vec<f64> = y.iter().map(|v| v * prep.scale).collect();
    Ok((prep.score(kind, &z, &alphabet.s0, ctx), prep.score(kind, &z, &alphabet.s1, ctx)))
}

/// Decides which waveform was sent: `false` for `s0`, `true` for `s1`.
pub fn detect(kind: DetectorKind, y: &[f64], alphabet: &SymbolAlphabet, ctx: &ReceiverContext) -> Result<bool> {
    let (m0, m1) = detector_metrics(kind, y, alphabet, ctx)?;
    Ok(m1 > m0)
}

/// Removes the mean of each symbol's samples and scales them to unit power.
pub fn normalize_symbol_energy(y: &mut [f64]) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let power = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = if power > 0.0 { power.sqrt().recip() } else { 1.0 };
    for v in y {
        *v = (*v - mean) * scale;
    }
}

/// One bit per `n_chips` samples; differential alphabets are decoded
/// against the previous waveform decision.
pub fn demodulate_stream(
    kind: DetectorKind,
    energies: &[f64],
    alphabet: &SymbolAlphabet,
    ctx: &ReceiverContext,
) -> Result<Vec<bool>> {
    let n = alphabet.n_chips;
    if !energies.len().is_multiple_of(n) {
        return Err(Error::LengthMismatch { expected: energies.len() / n * n + n, got: energies.len() });
    }
    let waveforms = energies
        .chunks_exact(n)
        .map(|sym| detect(kind, sym, alphabet, ctx).map(u8::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(bits_from_waveforms(alphabet, &waveforms))
}

/// Correlation demodulation of a coherent FSK stream, optionally
/// normalizing each symbol's energy first. For balanced alphabets the
/// normalization cannot change a decision.
pub fn demodulate_fsk_coherent(
    energies: &[f64],
    alphabet: &SymbolAlphabet,
    ctx: &ReceiverContext,
    normalize_energy: bool,
) -> Result<Vec<bool>> {
    if !normalize_energy {
        return demodulate_stream(DetectorKind::Correlation, energies, alphabet, ctx);
    }
    let n = alphabet.n_chips;
    let mut buf = energies.to_vec();
    if !buf.len().is_multiple_of(n) {
        return Err(Error::LengthMismatch { expected: buf.len() / n * n + n, got: buf.len() });
    }
    for sym in buf.chunks_exact_mut(n) {
        normalize_symbol_energy(sym);
    }
    let sign = ctx.sign_dh();
    let waveforms: Vec<u8> = buf
        .chunks_exact(n)
        .map(|sym| {
            let score = |s: &[i8]| sign * sym.iter().zip(s).map(|(&v, &c)| f64::from(c) * v).sum::<f64>();
            u8::from(score(&alphabet.s1) > score(&alphabet.s0))
        })
        .collect();
    Ok(bits_from_waveforms(alphabet, &waveforms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lte_grid::energy_moments;
    use crate::modem::{encode_bits, fsk_tones, make_alphabet, Scheme};
    use proptest::prelude::*;

    fn default_ctx(gamma: f64) -> ReceiverContext {
        let ch = ChannelSet::from_attenuations(-52.2, -82.6, 0.0, 1.0).with_lte_snr(gamma);
        ReceiverContext::new(&ch, 288)
    }

    fn mean_energies(chips: &[i8], ctx: &ReceiverContext) -> Vec<f64> {
        chips
            .iter()
            .map(|&c| {
                let h = if c > 0 { ctx.h_on_sq } else { ctx.h_off_sq };
                energy_moments(ctx.m_sc, h, ctx.noise_power).0
            })
            .collect()
    }

    #[test]
    fn noiseless_patterns_decode() {
        let ctx = default_ctx(10.0);
        for scheme in [Scheme::Bpsk, Scheme::Fsk] {
            let a = make_alphabet(scheme, 4).unwrap();
            for kind in DetectorKind::ALL {
                assert!(!detect(kind, &mean_energies(&a.s0, &ctx), &a, &ctx).unwrap(), "{kind}");
                assert!(detect(kind, &mean_energies(&a.s1, &ctx), &a, &ctx).unwrap(), "{kind}");
            }
        }
    }

    #[test]
    fn stream_round_trip() {
        let ctx = default_ctx(10.0);
        let bits: Vec<bool> = (0..64).map(|i| (i * 5) % 7 < 3).collect();
        for scheme in [Scheme::Bpsk, Scheme::Fsk, Scheme::Dbpsk] {
            let a = make_alphabet(scheme, 4).unwrap();
            let y = mean_energies(&encode_bits(&a, &bits), &ctx);
            for kind in DetectorKind::ALL {
                assert_eq!(demodulate_stream(kind, &y, &a, &ctx).unwrap(), bits);
            }
            assert_eq!(demodulate_fsk_coherent(&y, &a, &ctx, true).unwrap(), bits);
        }
        let a = make_alphabet(Scheme::Bpsk, 4).unwrap();
        assert!(demodulate_stream(DetectorKind::Power, &[1.0; 5], &a, &ctx).is_err());
        assert!(detect(DetectorKind::Power, &[1.0; 3], &a, &ctx).is_err());
    }

    #[test]
    fn chi_square_density_normalizes() {
        for &(m, lam) in &[(1usize, 0.0), (2, 3.0), (24, 40.0), (288, 600.0)] {
            let mean = 2.0 * m as f64 + lam;
            let sd = (4.0 * m as f64 + 4.0 * lam).sqrt();
            let (lo, hi) = ((mean - 12.0 * sd).max(1e-9), mean + 12.0 * sd);
            let steps = 20_000;
            let h = (hi - lo) / steps as f64;
            let total: f64 = (0..=steps)
                .map(|i| {
                    let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                    w * chi_square_log_pdf(lo + i as f64 * h, m, lam).exp()
                })
                .sum::<f64>()
                * h;
            assert!((total - 1.0).abs() < 1e-3, "m={m} lam={lam} total={total}");
        }
    }

    proptest! {
        #[test]
        fn energy_normalization_keeps_fsk_decisions(
            y in proptest::collection::vec(100.0f64..900.0, 80), gamma in 0.5f64..20.0
        ) {
            let ctx = default_ctx(gamma);
            for a in [make_alphabet(Scheme::Fsk, 4).unwrap(), fsk_tones(20, 2, 1).unwrap()] {
                let raw = demodulate_fsk_coherent(&y, &a, &ctx, false).unwrap();
                let norm = demodulate_fsk_coherent(&y, &a, &ctx, true).unwrap();
                prop_assert_eq!(raw, norm);
            }
        }

        #[test]
        fn correlation_is_sign_of_s0_dot_y(y in proptest::collection::vec(0.1f64..1000.0, 4)) {
            let ctx = default_ctx(3.0);
            let a = make_alphabet(Scheme::Bpsk, 4).unwrap();
            let dot: f64 = y.iter().zip(&a.s0).map(|(v, &c)| v * f64::from(c)).sum();
            let bit = detect(DetectorKind::Correlation, &y, &a, &ctx).unwrap();
            prop_assert_eq!(bit, dot < 0.0);
        }

        #[test]
        fn scale_invariance(y in proptest::collection::vec(0.1f64..1000.0, 4), k in 0.01f64..100.0) {
            let ctx = default_ctx(3.0);
            let a = make_alphabet(Scheme::Fsk, 4).unwrap();
            let scaled: Vec<f64> = y.iter().map(|v| v * k).collect();
            for kind in [DetectorKind::Correlation, DetectorKind::SquareRoot] {
                prop_assert_eq!(detect(kind, &y, &a, &ctx).unwrap(), detect(kind, &scaled, &a, &ctx).unwrap());
            }
        }

        #[test]
        fn antipodal_flip_negates(y in proptest::collection::vec(100.0f64..1000.0, 4)) {
            let ctx = default_ctx(3.0);
            let a = make_alphabet(Scheme::Bpsk, 4).unwrap();
            let flipped = SymbolAlphabet { s0: a.s1.clone(), s1: a.s0.clone(), ..a.clone() };
            for kind in DetectorKind::ALL {
                let (m0, m1) = detector_metrics(kind, &y, &a, &ctx).unwrap();
                let (f0, f1) = detector_metrics(kind, &y, &flipped, &ctx).unwrap();
                prop_assert_eq!((m0, m1), (f1, f0));
                if m0 != m1 {
                    prop_assert_ne!(detect(kind, &y, &a, &ctx).unwrap(), detect(kind, &y, &flipped, &ctx).unwrap());
                }
            }
        }

        #[test]
        fn power_metric_reduces_to_squared_deviation(
            y in proptest::collection::vec(200.0f64..800.0, 4), gamma in 0.5f64..20.0
        ) {
            // For BPSK the Gaussian log-likelihood ratio is a multiple of Σ s0 (z - M)².
            let ctx = default_ctx(gamma);
            let a = make_alphabet(Scheme::Bpsk, 4).unwrap();
            let (m0, m1) = detector_metrics(DetectorKind::Power, &y, &a, &ctx).unwrap();
            let m = ctx.m_sc as f64;
            let a_on = m + ctx.noncentrality(1);
            let a_off = m + ctx.noncentrality(-1);
            let reduced: f64 = y.iter().zip(&a.s0)
                .map(|(v, &c)| f64::from(c) * (2.0 * v / ctx.noise_power - m).powi(2))
                .sum();
            let want = (1.0 / a_off - 1.0 / a_on) / 8.0 * reduced;
            let got = m0 - m1;
            let scale = m0.abs().max(m1.abs()).max(want.abs()).max(1e-6);
            prop_assert!((got - want).abs() <= 1e-12 * scale, "{got} vs {want}");
        }
    }
}
