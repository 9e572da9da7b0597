use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{func}: argument {arg} = {value} is outside the domain")]
    Domain { func: &'static str, arg: &'static str, value: f64 },

    #[error("{func}: series did not converge within {terms} terms")]
    NonConvergence { func: &'static str, terms: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{scheme} cannot be built with {n_chips} chips per symbol")]
    UnsupportedChipCount { scheme: &'static str, n_chips: usize },

    #[error("sequence too short: need at least {needed} samples, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error("frame synchronisation failed (peak-to-sidelobe ratio {psr:.3})")]
    SyncFailed { psr: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, arg: &'static str, value: f64) -> Error {
    Error::Domain { func, arg, value }
}
