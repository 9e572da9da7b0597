//! Seeded Monte Carlo BER sweeps and receiver comparisons.
//!
//! Trials are split into fixed-size chunks, each with its own ChaCha stream
//! derived from `(seed, point, scheme, chunk)`. Counts are merged by chunk
//! index, so results do not depend on the number of worker threads.

pub mod replicate;
pub mod stats;

pub use replicate::{replicate_measurement, ReplicateConfig, ReplicateOutput};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::ber_theory::{exact_ber, gaussian_ber, DetectionParams, SeriesControl};
use crate::channel::{from_db, snr_per_bit, to_db, ChannelSet, LinkGeometry, Point};
use crate::error::{Error, Result};
use crate::lte_grid::{energy_law, energy_moments, gen_srs_symbol, receive_symbol, SrsConfig};
use crate::modem::detect::{demodulate_stream, DetectorKind, ReceiverContext};
use crate::modem::{encode_bits, make_alphabet, Scheme, SymbolAlphabet};
use stats::{derive_seed, wilson_interval, Z95};

const CHUNK_SYMBOLS: usize = 1000;

/// How the per-chip energy is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YModel {
    /// Exact noncentral chi-square law.
    #[default]
    ChiSquare,
    /// Normal law with the same mean and variance.
    Gaussian,
}

impl std::str::FromStr for YModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chi_square" | "chi-square" | "chisquare" | "chi2" => Ok(YModel::ChiSquare),
            "gaussian" | "normal" => Ok(YModel::Gaussian),
            other => Err(Error::InvalidConfig(format!("unknown y model '{other}'"))),
        }
    }
}

impl std::fmt::Display for YModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            YModel::ChiSquare => "chi_square",
            YModel::Gaussian => "gaussian",
        })
    }
}

/// Fixed path gains; the LTE SNR is swept through the noise power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkScenario {
    Attenuation { direct_db: f64, scatter_db: f64, scatter_phase_rad: f64 },
    Geometry { bs_pos: Point, ue_pos: Point, bd_pos: Point, carrier_freq_hz: f64 },
}

impl Default for LinkScenario {
    /// Direct path −52.2 dB, scattered path −82.6 dB, in phase.
    fn default() -> Self {
        LinkScenario::Attenuation { direct_db: -52.2, scatter_db: -82.6, scatter_phase_rad: 0.0 }
    }
}

impl LinkScenario {
    /// Channel at unit noise power, before any return-loss adjustment.
    pub fn base_channel(&self) -> Result<ChannelSet> {
        match *self {
            LinkScenario::Attenuation { direct_db, scatter_db, scatter_phase_rad } => {
                Ok(ChannelSet::from_attenuations(direct_db, scatter_db, scatter_phase_rad, 1.0))
            }
            LinkScenario::Geometry { bs_pos, ue_pos, bd_pos, carrier_freq_hz } => {
                let g = LinkGeometry::new(bs_pos, ue_pos, bd_pos)?;
                ChannelSet::from_geometry(&g, crate::channel::wavelength(carrier_freq_hz), 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scenario: LinkScenario,
    /// Optional measured (reflect, absorb) return losses in dB.
    pub return_loss_db: Option<(f64, f64)>,
    pub snr_grid_db: Vec<f64>,
    pub n_symbols_per_point: usize,
    pub schemes: Vec<Scheme>,
    pub n_chips: usize,
    pub detectors: Vec<DetectorKind>,
    pub m_sc: usize,
    pub prior_s0: f64,
    pub seed: u64,
    /// Draw `y` from its law directly instead of synthesizing every RE.
    pub fast_path: bool,
    pub y_model: YModel,
    pub series: SeriesControl,
    pub with_theory: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenario: LinkScenario::default(),
            return_loss_db: None,
            snr_grid_db: (0..=20).map(f64::from).collect(),
            n_symbols_per_point: 10_000,
            schemes: vec![Scheme::Bpsk],
            n_chips: 4,
            detectors: vec![DetectorKind::Correlation],
            m_sc: 288,
            prior_s0: 0.5,
            seed: 1,
            fast_path: true,
            y_model: YModel::ChiSquare,
            series: SeriesControl::default(),
            with_theory: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_symbols_per_point < 100 {
            return bad(format!("need at least 100 symbols per point, got {}", self.n_symbols_per_point));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("SNR grid must be non-empty and strictly increasing".into());
        }
        if self.schemes.is_empty() || self.detectors.is_empty() {
            return bad("at least one scheme and one detector are required".into());
        }
        if !(0.0..=1.0).contains(&self.prior_s0) {
            return bad(format!("prior_s0 must lie in [0, 1], got {}", self.prior_s0));
        }
        if self.m_sc == 0 {
            return bad("m_sc must be positive".into());
        }
        if !self.fast_path && self.y_model == YModel::Gaussian {
            return bad("the Gaussian y model only exists on the fast path".into());
        }
        self.series.validate()?;
        for &s in &self.schemes {
            make_alphabet(s, self.n_chips)?;
        }
        Ok(())
    }

    /// Channel with noise set for LTE SNR `gamma_db`.
    pub fn channel_at(&self, gamma_db: f64) -> Result<ChannelSet> {
        channel_for(&self.scenario, self.return_loss_db, gamma_db)
    }
}

pub(crate) fn channel_for(
    scenario: &LinkScenario,
    return_loss_db: Option<(f64, f64)>,
    gamma_db: f64,
) -> Result<ChannelSet> {
    let mut ch = scenario.base_channel()?;
    if let Some((on, off)) = return_loss_db {
        ch = ch.with_return_loss(on, off);
    }
    Ok(ch.with_lte_snr(from_db(gamma_db)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    TheoryExact,
    TheoryGaussian,
    TheoryFsk,
    Simulation,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::TheoryExact => "theory_exact",
            Source::TheoryGaussian => "theory_gaussian",
            Source::TheoryFsk => "theory_fsk",
            Source::Simulation => "simulation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub gamma_db: f64,
    pub gamma_b_db: f64,
    pub scheme: Scheme,
    /// `None` for theory rows.
    pub receiver: Option<DetectorKind>,
    pub source: Source,
    pub ber: f64,
    pub n_errors: u64,
    pub n_bits: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BerPoint {
    pub fn simulated(
        gamma_db: f64,
        gamma_b_db: f64,
        scheme: Scheme,
        receiver: DetectorKind,
        n_errors: u64,
        n_bits: u64,
    ) -> Self {
        let (ci_low, ci_high) = wilson_interval(n_errors, n_bits, Z95);
        Self {
            gamma_db,
            gamma_b_db,
            scheme,
            receiver: Some(receiver),
            source: Source::Simulation,
            ber: n_errors as f64 / n_bits as f64,
            n_errors,
            n_bits,
            ci_low,
            ci_high,
        }
    }

    pub fn theory(gamma_db: f64, gamma_b_db: f64, scheme: Scheme, source: Source, ber: f64) -> Self {
        Self {
            gamma_db,
            gamma_b_db,
            scheme,
            receiver: None,
            source,
            ber,
            n_errors: 0,
            n_bits: 0,
            ci_low: ber,
            ci_high: ber,
        }
    }
}

/// Everything one Monte Carlo point needs.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub alphabet: SymbolAlphabet,
    pub channel: ChannelSet,
    pub m_sc: usize,
    pub detectors: Vec<DetectorKind>,
    pub prior_s0: f64,
    pub fast_path: bool,
    pub y_model: YModel,
}

/// Error counts per detector and pairwise decision disagreements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialCounts {
    pub n_bits: u64,
    pub errors: Vec<u64>,
    /// `disagreements[a][b]` counts bits where detectors `a` and `b` differ.
    pub disagreements: Vec<Vec<u64>>,
}

impl TrialCounts {
    fn zero(k: usize) -> Self {
        Self { n_bits: 0, errors: vec![0; k], disagreements: vec![vec![0; k]; k] }
    }

    fn merge(mut self, other: &Self) -> Self {
        self.n_bits += other.n_bits;
        for (a, b) in self.errors.iter_mut().zip(&other.errors) {
            *a += b;
        }
        for (ra, rb) in self.disagreements.iter_mut().zip(&other.disagreements) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
        self
    }
}

/// Per-chip energy generator for the two BD states.
pub(crate) enum ChipSampler {
    Direct { on: crate::lte_grid::NoncentralChiSquared, off: crate::lte_grid::NoncentralChiSquared, half_noise: f64 },
    Gaussian { on: Normal<f64>, off: Normal<f64> },
    PerRe { cfg: SrsConfig, ch: ChannelSet },
}

impl ChipSampler {
    pub(crate) fn new(ch: &ChannelSet, m_sc: usize, fast_path: bool, y_model: YModel) -> Result<Self> {
        let s2 = ch.noise_power;
        if !fast_path {
            let cfg = SrsConfig { m_sc, ..SrsConfig::default() };
            return Ok(ChipSampler::PerRe { cfg, ch: *ch });
        }
        Ok(match y_model {
            YModel::ChiSquare => ChipSampler::Direct {
                on: energy_law(m_sc, ch.h_on_sq(), s2)?,
                off: energy_law(m_sc, ch.h_off_sq(), s2)?,
                half_noise: 0.5 * s2,
            },
            YModel::Gaussian => {
                let normal = |h_sq: f64| {
                    let (m, v) = energy_moments(m_sc, h_sq, s2);
                    Normal::new(m, v.sqrt()).map_err(|e| Error::InvalidConfig(e.to_string()))
                };
                ChipSampler::Gaussian { on: normal(ch.h_on_sq())?, off: normal(ch.h_off_sq())? }
            }
        })
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, chip: i8, l: u64, rng: &mut R) -> Result<f64> {
        Ok(match self {
            ChipSampler::Direct { on, off, half_noise } => {
                half_noise * if chip > 0 { on.sample(rng) } else { off.sample(rng) }
            }
            ChipSampler::Gaussian { on, off } => {
                let d = if chip > 0 { on } else { off };
                d.sample(rng).max(0.0)
            }
            ChipSampler::PerRe { cfg, ch } => {
                let h = if chip > 0 { ch.h_on() } else { ch.h_off() };
                let sym = gen_srs_symbol(cfg, l, rng);
                receive_symbol(&sym, h, ch.noise_power, rng)?.y
            }
        })
    }
}

fn run_chunk(setup: &TrialSetup, n_symbols: usize, seed: u64) -> Result<TrialCounts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = ChipSampler::new(&setup.channel, setup.m_sc, setup.fast_path, setup.y_model)?;
    let bits: Vec<bool> = (0..n_symbols).map(|_| rng.random::<f64>() >= setup.prior_s0).collect();
    let chips = encode_bits(&setup.alphabet, &bits);
    let y =
        chips.iter().enumerate().map(|(l, &c)| sampler.sample(c, l as u64, &mut rng)).collect::<Result<Vec<f64>>>()?;
    let ctx = ReceiverContext::new(&setup.channel, setup.m_sc);
    let decisions =
        setup.detectors.iter().map(|&k| demodulate_stream(k, &y, &setup.alphabet, &ctx)).collect::<Result<Vec<_>>>()?;
    let k = setup.detectors.len();
    let mut counts = TrialCounts::zero(k);
    counts.n_bits = n_symbols as u64;
    for (d, dec) in decisions.iter().enumerate() {
        counts.errors[d] = dec.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
        for (e, other) in decisions.iter().enumerate() {
            if e != d {
                counts.disagreements[d][e] = dec.iter().zip(other).filter(|(a, b)| a != b).count() as u64;
            }
        }
    }
    Ok(counts)
}

/// Runs `n_symbols` trials of one setup, every detector on the same realizations.
pub fn run_trials(setup: &TrialSetup, n_symbols: usize, seed: u64, path: &[u64]) -> Result<TrialCounts> {
    let n_chunks = n_symbols.div_ceil(CHUNK_SYMBOLS);
    let parts = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK_SYMBOLS.min(n_symbols - c * CHUNK_SYMBOLS);
            let mut p = path.to_vec();
            p.push(c as u64);
            run_chunk(setup, len, derive_seed(seed, &p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().fold(TrialCounts::zero(setup.detectors.len()), |acc, p| acc.merge(p)))
}

/// SNR per bit in dB for a scheme, counting only the chips that differ
/// between the two waveforms.
pub fn gamma_b_db_for(ch: &ChannelSet, alphabet: &SymbolAlphabet, m_sc: usize) -> f64 {
    to_db(snr_per_bit(ch, alphabet.effective_chips(), m_sc))
}

fn theory_points(
    cfg: &SweepConfig,
    gamma_db: f64,
    alphabet: &SymbolAlphabet,
    ch: &ChannelSet,
) -> Result<Vec<BerPoint>> {
    if alphabet.is_differential() {
        return Ok(Vec::new());
    }
    let gb = gamma_b_db_for(ch, alphabet, cfg.m_sc);
    let p = DetectionParams::new(cfg.m_sc, alphabet.effective_chips(), ch.h_on_sq(), ch.h_off_sq(), ch.noise_power)?
        .with_prior(cfg.prior_s0)?;
    Ok(vec![
        BerPoint::theory(gamma_db, gb, alphabet.scheme, Source::TheoryExact, exact_ber(&p, &cfg.series)?),
        BerPoint::theory(gamma_db, gb, alphabet.scheme, Source::TheoryGaussian, gaussian_ber(&p)),
    ])
}

fn simulate_grid(cfg: &SweepConfig) -> Result<Vec<(f64, Scheme, f64, TrialCounts)>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (pi, &gamma_db) in cfg.snr_grid_db.iter().enumerate() {
        let ch = cfg.channel_at(gamma_db)?;
        for (si, &scheme) in cfg.schemes.iter().enumerate() {
            let alphabet = make_alphabet(scheme, cfg.n_chips)?;
            let setup = TrialSetup {
                alphabet: alphabet.clone(),
                channel: ch,
                m_sc: cfg.m_sc,
                detectors: cfg.detectors.clone(),
                prior_s0: cfg.prior_s0,
                fast_path: cfg.fast_path,
                y_model: cfg.y_model,
            };
            let counts = run_trials(&setup, cfg.n_symbols_per_point, cfg.seed, &[pi as u64, si as u64])?;
            out.push((gamma_db, scheme, gamma_b_db_for(&ch, &alphabet, cfg.m_sc), counts));
        }
    }
    Ok(out)
}

/// Simulated BER for every (SNR, scheme, detector), followed by the theory
/// rows for each (SNR, scheme) when requested.
pub fn run_ber_sweep(cfg: &SweepConfig) -> Result<Vec<BerPoint>> {
    let sims = simulate_grid(cfg)?;
    let mut points = Vec::new();
    for (gamma_db, scheme, gb, counts) in &sims {
        for (d, &kind) in cfg.detectors.iter().enumerate() {
            points.push(BerPoint::simulated(*gamma_db, *gb, *scheme, kind, counts.errors[d], counts.n_bits));
        }
        if cfg.with_theory {
            let ch = cfg.channel_at(*gamma_db)?;
            let alphabet = make_alphabet(*scheme, cfg.n_chips)?;
            points.extend(theory_points(cfg, *gamma_db, &alphabet, &ch)?);
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disagreement {
    pub gamma_db: f64,
    pub scheme: Scheme,
    pub a: DetectorKind,
    pub b: DetectorKind,
    pub count: u64,
    pub n_bits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub points: Vec<BerPoint>,
    pub disagreements: Vec<Disagreement>,
}

/// All listed detectors on common random numbers, with pairwise disagreement counts.
pub fn compare_receivers(cfg: &SweepConfig) -> Result<CompareTable> {
    if cfg.detectors.len() < 2 {
        return Err(Error::InvalidConfig("comparison needs at least two detectors".into()));
    }
    let sims = simulate_grid(cfg)?;
    let mut table = CompareTable { points: Vec::new(), disagreements: Vec::new() };
    for (gamma_db, scheme, gb, counts) in &sims {
        for (d, &kind) in cfg.detectors.iter().enumerate() {
            table.points.push(BerPoint::simulated(*gamma_db, *gb, *scheme, kind, counts.errors[d], counts.n_bits));
        }
        for a in 0..cfg.detectors.len() {
            for b in a + 1..cfg.detectors.len() {
                table.disagreements.push(Disagreement {
                    gamma_db: *gamma_db,
                    scheme: *scheme,
                    a: cfg.detectors[a],
                    b: cfg.detectors[b],
                    count: counts.disagreements[a][b],
                    n_bits: counts.n_bits,
                });
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(detectors: Vec<DetectorKind>) -> SweepConfig {
        SweepConfig { snr_grid_db: vec![4.0, 12.0], n_symbols_per_point: 2000, detectors, ..SweepConfig::default() }
    }

    #[test]
    fn validation() {
        let mut c = quick(vec![DetectorKind::Correlation]);
        c.n_symbols_per_point = 50;
        assert!(c.validate().is_err());
        let mut c = quick(vec![DetectorKind::Correlation]);
        c.snr_grid_db = vec![3.0, 3.0];
        assert!(c.validate().is_err());
        assert!(compare_receivers(&quick(vec![DetectorKind::Power])).is_err());
    }

    #[test]
    fn sweep_is_reproducible_and_thread_independent() {
        let cfg = quick(vec![DetectorKind::Correlation, DetectorKind::SquareRoot]);
        let a = run_ber_sweep(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_ber_sweep(&cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * (2 + 2));
    }

    #[test]
    fn dead_scatterer_is_chance() {
        let mut cfg = quick(vec![DetectorKind::Correlation]);
        cfg.scenario = LinkScenario::Attenuation { direct_db: -52.2, scatter_db: -400.0, scatter_phase_rad: 0.0 };
        cfg.n_symbols_per_point = 10_000;
        cfg.with_theory = false;
        for p in run_ber_sweep(&cfg).unwrap() {
            let sd = (0.25 / p.n_bits as f64).sqrt();
            assert!((p.ber - 0.5).abs() < 3.0 * sd + 1e-3, "{p:?}");
        }
    }

    #[test]
    fn per_re_path_matches_fast_path() {
        let mut cfg = quick(vec![DetectorKind::Correlation]);
        cfg.snr_grid_db = vec![6.0];
        cfg.n_symbols_per_point = 1500;
        cfg.with_theory = false;
        let fast = run_ber_sweep(&cfg).unwrap();
        cfg.fast_path = false;
        let slow = run_ber_sweep(&cfg).unwrap();
        let (f, s) = (&fast[0], &slow[0]);
        let se = (stats::proportion_std_error(f.n_errors, f.n_bits).powi(2)
            + stats::proportion_std_error(s.n_errors, s.n_bits).powi(2))
        .sqrt();
        assert!((f.ber - s.ber).abs() < 4.0 * se, "{} vs {}", f.ber, s.ber);
    }
}
