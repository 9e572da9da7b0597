//! Simulated replay of the over-the-air FSK measurement.
//!
//! Each packet is a 101-bit frame of 40 ms FSK symbols (20 chips at the
//! 2 ms SRS period) surrounded by 0.5 s of absorbing idle time. Every packet
//! gets its own SNR per bit, drawn uniformly in dB, and the receiver
//! synchronises on the header before demodulating the 80 payload bits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::stats::{binomial_test, derive_seed, wilson_interval, Z95};
use super::{channel_for, BerPoint, ChipSampler, LinkScenario, Source, YModel};
use crate::ber_theory::fsk_coherent_ber;
use crate::channel::{noise_for_snr_per_bit, snr_per_bit, to_db};
use crate::error::{Error, Result};
use crate::modem::detect::{demodulate_fsk_coherent, ReceiverContext};
use crate::modem::framing::{encode_frame, frame_sync, SyncOutcome, PAYLOAD_BITS, SYNC_BITS};
use crate::modem::{fsk_tones, DetectorKind, Scheme};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateConfig {
    pub n_packets: usize,
    pub gamma_b_db_min: f64,
    pub gamma_b_db_max: f64,
    pub bin_width_db: f64,
    pub m_sc: usize,
    /// Chips per FSK symbol.
    pub n_chips: usize,
    /// Tone half-periods in chips.
    pub half_periods: (usize, usize),
    pub idle_chips: usize,
    pub scenario: LinkScenario,
    pub return_loss_db: Option<(f64, f64)>,
    /// Scale each symbol to zero mean and unit power before correlating.
    pub normalize_energy: bool,
    pub seed: u64,
}

impl Default for ReplicateConfig {
    fn default() -> Self {
        Self {
            n_packets: 2000,
            gamma_b_db_min: 3.0,
            gamma_b_db_max: 10.0,
            bin_width_db: 0.25,
            m_sc: 288,
            n_chips: 20,
            half_periods: (2, 1),
            idle_chips: 250,
            scenario: LinkScenario::default(),
            return_loss_db: Some((0.5, 23.0)),
            normalize_energy: false,
            seed: 1,
        }
    }
}

impl ReplicateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_packets == 0 {
            return Err(Error::InvalidConfig("n_packets must be positive".into()));
        }
        if !(self.gamma_b_db_max > self.gamma_b_db_min) {
            return Err(Error::InvalidConfig("empty SNR-per-bit range".into()));
        }
        if !(self.bin_width_db > 0.0) {
            return Err(Error::InvalidConfig("bin width must be positive".into()));
        }
        fsk_tones(self.n_chips, self.half_periods.0, self.half_periods.1)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketLog {
    pub index: usize,
    pub gamma_b_db: f64,
    pub true_offset: usize,
    /// `None` when synchronisation declared failure.
    pub sync_offset: Option<usize>,
    pub psr: f64,
    pub n_errors: u64,
    pub n_bits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinRow {
    pub lo_db: f64,
    pub hi_db: f64,
    pub n_packets: u64,
    pub n_errors: u64,
    pub n_bits: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `Q(√γ_b)` at the bin centre.
    pub theory_center: f64,
    /// `Q(√γ_b)` averaged over the packets in the bin.
    pub theory_mean: f64,
    /// Two-sided binomial test of the error count against `theory_mean`.
    pub p_value: f64,
}

impl BinRow {
    pub fn center_db(&self) -> f64 {
        0.5 * (self.lo_db + self.hi_db)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutput {
    pub bins: Vec<BinRow>,
    pub packets: Vec<PacketLog>,
    pub sync_failures: usize,
}

impl ReplicateOutput {
    /// Bins as simulation rows plus the coherent FSK theory at each bin centre.
    pub fn points(&self) -> Vec<BerPoint> {
        let mut out = Vec::new();
        for b in self.bins.iter().filter(|b| b.n_bits > 0) {
            let mut p = BerPoint::simulated(
                f64::NAN,
                b.center_db(),
                Scheme::Fsk,
                DetectorKind::Correlation,
                b.n_errors,
                b.n_bits,
            );
            p.ci_low = b.ci_low;
            p.ci_high = b.ci_high;
            out.push(p);
            out.push(BerPoint::theory(f64::NAN, b.center_db(), Scheme::Fsk, Source::TheoryFsk, b.theory_center));
        }
        out
    }
}

fn simulate_packet(cfg: &ReplicateConfig, index: usize) -> Result<PacketLog> {
    let alphabet = fsk_tones(cfg.n_chips, cfg.half_periods.0, cfg.half_periods.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[index as u64]));
    let gamma_b_db = cfg.gamma_b_db_min + (cfg.gamma_b_db_max - cfg.gamma_b_db_min) * rng.random::<f64>();

    let base = channel_for(&cfg.scenario, cfg.return_loss_db, 0.0)?;
    let noise =
        noise_for_snr_per_bit(base.h_on_sq(), base.h_off_sq(), cfg.n_chips, cfg.m_sc, 10f64.powf(gamma_b_db / 10.0))?;
    let ch = base.with_noise_power(noise);
    debug_assert!((to_db(snr_per_bit(&ch, cfg.n_chips, cfg.m_sc)) - gamma_b_db).abs() < 1e-9);

    let payload: Vec<bool> = (0..PAYLOAD_BITS).map(|_| rng.random()).collect();
    let lead = rng.random_range(0..=cfg.idle_chips);
    let mut chips = vec![-1i8; lead];
    chips.extend(encode_frame(&payload, &alphabet)?);
    chips.extend(std::iter::repeat_n(-1i8, cfg.idle_chips));

    let sampler = ChipSampler::new(&ch, cfg.m_sc, true, YModel::ChiSquare)?;
    let y =
        chips.iter().enumerate().map(|(l, &c)| sampler.sample(c, l as u64, &mut rng)).collect::<Result<Vec<f64>>>()?;

    let ctx = ReceiverContext::new(&ch, cfg.m_sc);
    let (mean_on, _) = crate::lte_grid::energy_moments(cfg.m_sc, ch.h_on_sq(), noise);
    let (mean_off, _) = crate::lte_grid::energy_moments(cfg.m_sc, ch.h_off_sq(), noise);
    let mid = 0.5 * (mean_on + mean_off);
    let sign = if ctx.delta_h < 0.0 { -1.0 } else { 1.0 };
    let soft: Vec<f64> = y.iter().map(|v| sign * (v - mid)).collect();

    let outcome = frame_sync(&soft, &alphabet)?;
    let (sync_offset, n_errors) = match outcome {
        SyncOutcome::Locked { offset, .. } => {
            let start = offset + SYNC_BITS * cfg.n_chips;
            let end = start + PAYLOAD_BITS * cfg.n_chips;
            let bits = demodulate_fsk_coherent(&y[start..end], &alphabet, &ctx, cfg.normalize_energy)?;
            let errs = bits.iter().zip(&payload).filter(|(a, b)| a != b).count() as u64;
            (Some(offset), errs)
        }
        SyncOutcome::Failed { .. } => (None, 0),
    };
    Ok(PacketLog {
        index,
        gamma_b_db,
        true_offset: lead,
        sync_offset,
        psr: outcome.psr(),
        n_errors,
        n_bits: if sync_offset.is_some() { PAYLOAD_BITS as u64 } else { 0 },
    })
}

/// Runs the packet loop and aggregates errors into SNR-per-bit bins.
pub fn replicate_measurement(cfg: &ReplicateConfig) -> Result<ReplicateOutput> {
    cfg.validate()?;
    let packets = (0..cfg.n_packets).into_par_iter().map(|i| simulate_packet(cfg, i)).collect::<Result<Vec<_>>>()?;

    let n_bins = ((cfg.gamma_b_db_max - cfg.gamma_b_db_min) / cfg.bin_width_db).ceil() as usize;
    let mut acc = vec![(0u64, 0u64, 0u64, 0.0f64); n_bins];
    let mut sync_failures = 0;
    for p in &packets {
        if p.sync_offset.is_none() {
            sync_failures += 1;
            continue;
        }
        let b = (((p.gamma_b_db - cfg.gamma_b_db_min) / cfg.bin_width_db) as usize).min(n_bins - 1);
        acc[b].0 += 1;
        acc[b].1 += p.n_errors;
        acc[b].2 += p.n_bits;
        acc[b].3 += fsk_coherent_ber(10f64.powf(p.gamma_b_db / 10.0));
    }
    let bins = acc
        .into_iter()
        .enumerate()
        .map(|(b, (n_packets, n_errors, n_bits, theory_sum))| {
            let lo_db = cfg.gamma_b_db_min + b as f64 * cfg.bin_width_db;
            let hi_db = (lo_db + cfg.bin_width_db).min(cfg.gamma_b_db_max);
            let center = 0.5 * (lo_db + hi_db);
            let theory_center = fsk_coherent_ber(10f64.powf(center / 10.0));
            let theory_mean = if n_packets > 0 { theory_sum / n_packets as f64 } else { theory_center };
            let (ci_low, ci_high) = wilson_interval(n_errors, n_bits, Z95);
            BinRow {
                lo_db,
                hi_db,
                n_packets,
                n_errors,
                n_bits,
                ber: if n_bits > 0 { n_errors as f64 / n_bits as f64 } else { f64::NAN },
                ci_low,
                ci_high,
                theory_center,
                theory_mean,
                p_value: if n_bits > 0 { binomial_test(n_errors, n_bits, theory_mean) } else { f64::NAN },
            }
        })
        .collect();
    Ok(ReplicateOutput { bins, packets, sync_failures })
}
