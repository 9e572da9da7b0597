//! Frame layout and synchronisation.
//!
//! A frame is a 21-bit sync header followed by 80 payload bits. The header
//! is the 7-chip Barker code sent three times with outer polarity `+ + -`.

use super::{encode_bits, waveform_indices, SymbolAlphabet};
use crate::error::{Error, Result};

pub const BARKER7: [i8; 7] = [1, 1, 1, -1, -1, 1, -1];
pub const SYNC_POLARITY: [i8; 3] = [1, 1, -1];
pub const SYNC_BITS: usize = 21;
pub const PAYLOAD_BITS: usize = 80;
pub const FRAME_BITS: usize = SYNC_BITS + PAYLOAD_BITS;

/// Minimum peak-to-sidelobe ratio for a lock.
pub const MIN_PSR: f64 = 2.0;

pub fn sync_pattern() -> [i8; SYNC_BITS] {
    let mut out = [0i8; SYNC_BITS];
    for (r, &p) in SYNC_POLARITY.iter().enumerate() {
        for (i, &c) in BARKER7.iter().enumerate() {
            out[7 * r + i] = p * c;
        }
    }
    out
}

pub fn sync_bits() -> [bool; SYNC_BITS] {
    sync_pattern().map(|c| c > 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub sync: [bool; SYNC_BITS],
    pub payload_bits: Vec<bool>,
    pub symbol_period_s: f64,
}

impl Frame {
    pub fn new(payload_bits: Vec<bool>, symbol_period_s: f64) -> Result<Self> {
        if payload_bits.len() != PAYLOAD_BITS {
            return Err(Error::LengthMismatch { expected: PAYLOAD_BITS, got: payload_bits.len() });
        }
        Ok(Self { sync: sync_bits(), payload_bits, symbol_period_s })
    }

    pub fn bits(&self) -> Vec<bool> {
        self.sync.iter().chain(&self.payload_bits).copied().collect()
    }

    pub fn duration_s(&self) -> f64 {
        FRAME_BITS as f64 * self.symbol_period_s
    }
}

/// Chips of one frame: sync header then payload.
pub fn encode_frame(payload: &[bool], alphabet: &SymbolAlphabet) -> Result<Vec<i8>> {
    let frame = Frame::new(payload.to_vec(), 0.0)?;
    Ok(encode_bits(alphabet, &frame.bits()))
}

/// Frame chips followed by `idle_chips` chips of the absorbing state.
pub fn encode_frame_with_idle(payload: &[bool], alphabet: &SymbolAlphabet, idle_chips: usize) -> Result<Vec<i8>> {
    let mut chips = encode_frame(payload, alphabet)?;
    chips.extend(std::iter::repeat_n(-1, idle_chips));
    Ok(chips)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyncOutcome {
    Locked { offset: usize, peak: f64, psr: f64 },
    Failed { peak: f64, psr: f64 },
}

impl SyncOutcome {
    pub fn offset(&self) -> Option<usize> {
        match *self {
            SyncOutcome::Locked { offset, .. } => Some(offset),
            SyncOutcome::Failed { .. } => None,
        }
    }

    pub fn psr(&self) -> f64 {
        match *self {
            SyncOutcome::Locked { psr, .. } | SyncOutcome::Failed { psr, .. } => psr,
        }
    }
}

/// Per-chip template for the header: the emitted waveform minus the other one.
pub fn sync_template(alphabet: &SymbolAlphabet) -> Vec<f64> {
    waveform_indices(alphabet, &sync_bits())
        .into_iter()
        .flat_map(|w| {
            let (a, b) = (alphabet.waveform(w), alphabet.waveform(1 - w));
            a.iter().zip(b).map(|(&x, &y)| 0.5 * f64::from(x - y)).collect::<Vec<_>>()
        })
        .collect()
}

/// Finds the frame start in a stream of soft chip values (positive means
/// reflecting). Only offsets where a whole frame fits are searched.
pub fn frame_sync(chip_llrs: &[f64], alphabet: &SymbolAlphabet) -> Result<SyncOutcome> {
    let n = alphabet.n_chips;
    let frame_len = FRAME_BITS * n;
    if chip_llrs.len() < frame_len {
        return Err(Error::SequenceTooShort { needed: frame_len, got: chip_llrs.len() });
    }
    let template = sync_template(alphabet);
    let active: Vec<(usize, f64)> =
        template.iter().enumerate().filter(|(_, &t)| t != 0.0).map(|(i, &t)| (i, t)).collect();
    let t_norm = active.iter().map(|(_, t)| t * t).sum::<f64>().sqrt();

    let corr: Vec<f64> = (0..=chip_llrs.len() - frame_len)
        .map(|o| {
            let (mut dot, mut energy) = (0.0, 0.0);
            for &(i, t) in &active {
                let c = chip_llrs[o + i];
                dot += t * c;
                energy += c * c;
            }
            if energy > 0.0 {
                dot / (t_norm * energy.sqrt())
            } else {
                0.0
            }
        })
        .collect();

    let (offset, peak) =
        corr.iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (o, c)| if c > best.1 { (o, c) } else { best });
    let sidelobe =
        corr.iter().enumerate().filter(|(o, _)| o.abs_diff(offset) >= n).map(|(_, &c)| c).fold(0.0, f64::max);
    // Power ratio against the strongest competing positive lobe.
    let psr = if sidelobe > 0.0 {
        (peak / sidelobe).powi(2)
    } else if peak > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(if peak > 0.0 && psr >= MIN_PSR {
        SyncOutcome::Locked { offset, peak, psr }
    } else {
        SyncOutcome::Failed { peak, psr }
    })
}
