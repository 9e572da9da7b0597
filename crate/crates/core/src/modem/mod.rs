//! Backscatter symbol alphabets and bit-to-chip mapping.
//!
//! A chip is one BD state held for one SRS period: `+1` reflecting, `-1`
//! absorbing. Each bit is sent as one of two balanced chip patterns.

pub mod detect;
pub mod framing;

pub use detect::{demodulate_stream, detect, DetectorKind, ReceiverContext};
pub use framing::{encode_frame, frame_sync, Frame, SyncOutcome};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Bpsk,
    Fsk,
    /// Differential BPSK: bit 1 toggles the waveform, bit 0 repeats it.
    Dbpsk,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Bpsk => "bpsk",
            Scheme::Fsk => "fsk",
            Scheme::Dbpsk => "dbpsk",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Scheme::Bpsk),
            "fsk" => Ok(Scheme::Fsk),
            "dbpsk" | "d-bpsk" => Ok(Scheme::Dbpsk),
            other => Err(Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolAlphabet {
    pub scheme: Scheme,
    pub n_chips: usize,
    pub s0: Vec<i8>,
    pub s1: Vec<i8>,
}

impl SymbolAlphabet {
    pub fn waveform(&self, index: u8) -> &[i8] {
        if index == 0 {
            &self.s0
        } else {
            &self.s1
        }
    }

    /// Chips where the two waveforms differ; only these carry information.
    pub fn effective_chips(&self) -> usize {
        self.s0.iter().zip(&self.s1).filter(|(a, b)| a != b).count()
    }

    pub fn is_differential(&self) -> bool {
        self.scheme == Scheme::Dbpsk
    }
}

/// Square wave of `n_chips` chips with the given half-period, starting low.
fn square_wave(n_chips: usize, half_period: usize) -> Vec<i8> {
    (0..n_chips).map(|i| if (i / half_period).is_multiple_of(2) { -1 } else { 1 }).collect()
}

pub fn make_alphabet(scheme: Scheme, n_chips: usize) -> Result<SymbolAlphabet> {
    let unsupported = || Error::UnsupportedChipCount { scheme: scheme.name(), n_chips };
    if n_chips < 2 || !n_chips.is_multiple_of(2) {
        return Err(unsupported());
    }
    match scheme {
        Scheme::Bpsk | Scheme::Dbpsk => {
            let s0 = square_wave(n_chips, 1);
            let s1 = s0.iter().map(|c| -c).collect();
            Ok(SymbolAlphabet { scheme, n_chips, s0, s1 })
        }
        Scheme::Fsk => {
            if !n_chips.is_multiple_of(4) {
                return Err(unsupported());
            }
            Ok(SymbolAlphabet {
                scheme,
                n_chips,
                s0: square_wave(n_chips, n_chips / 2),
                s1: square_wave(n_chips, n_chips / 4),
            })
        }
    }
}

/// FSK alphabet built from two square-wave tones given by their half-periods
/// in chips, e.g. half-periods 2 and 1 at a 500 Hz chip rate are 125 Hz and 250 Hz.
pub fn fsk_tones(n_chips: usize, half_period0: usize, half_period1: usize) -> Result<SymbolAlphabet> {
    let fits = |hp: usize| hp > 0 && n_chips.is_multiple_of(2 * hp);
    if n_chips == 0 || half_period0 == half_period1 || !fits(half_period0) || !fits(half_period1) {
        return Err(Error::UnsupportedChipCount { scheme: "fsk", n_chips });
    }
    Ok(SymbolAlphabet {
        scheme: Scheme::Fsk,
        n_chips,
        s0: square_wave(n_chips, half_period0),
        s1: square_wave(n_chips, half_period1),
    })
}

/// Which waveform (0 or 1) is transmitted for each bit.
pub fn waveform_indices(alphabet: &SymbolAlphabet, bits: &[bool]) -> Vec<u8> {
    if alphabet.is_differential() {
        let mut state = 0u8;
        bits.iter()
            .map(|&b| {
                state ^= u8::from(b);
                state
            })
            .collect()
    } else {
        bits.iter().map(|&b| u8::from(b)).collect()
    }
}

/// Inverse of [`waveform_indices`].
pub fn bits_from_waveforms(alphabet: &SymbolAlphabet, waveforms: &[u8]) -> Vec<bool> {
    if alphabet.is_differential() {
        let mut prev = 0u8;
        waveforms
            .iter()
            .map(|&w| {
                let bit = w != prev;
                prev = w;
                bit
            })
            .collect()
    } else {
        waveforms.iter().map(|&w| w != 0).collect()
    }
}

pub fn encode_bits(alphabet: &SymbolAlphabet, bits: &[bool]) -> Vec<i8> {
    waveform_indices(alphabet, bits).into_iter().flat_map(|w| alphabet.waveform(w).iter().copied()).collect()
}
