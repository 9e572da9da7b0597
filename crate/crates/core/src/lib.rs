//! Link-level simulation of ambient backscatter riding on LTE uplink
//! sounding reference signals.
//!
//! A backscatter device (BD) near a UE toggles between reflecting and
//! absorbing at the SRS rate. The base station sees this as a change in the
//! received SRS energy per symbol and decodes the BD bits from that
//! statistic. The crate covers the energy statistic, the two-path channel,
//! the detectors, exact and Gaussian BER theory, coverage maps and Monte
//! Carlo harnesses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ber_theory;
pub mod channel;
pub mod coverage;
pub mod error;
pub mod lte_grid;
pub mod modem;
pub mod montecarlo;
pub mod specfun;

pub use ber_theory::{
    ber_vs_iota, doubly_noncentral_f_cdf, doubly_noncentral_f_sf, exact_ber, fsk_coherent_ber, gaussian_ber,
    iota_magnitude_for_target, BerEngine, DetectionParams, SeriesControl,
};
pub use channel::{
    composite_gain, fspl_gain, lte_snr, scatter_ratio, snr_per_bit, ChannelSet, LinkGeometry, ScatterRatio,
};
pub use coverage::{
    compute_ber_grid, contour_export, range_estimate, BerGrid, ContourLine, CoverageScenario, GridSpec, PhaseModel,
    RangeEstimate,
};
pub use error::{Error, Result};
pub use lte_grid::{default_config, EnergySample, SrsConfig, SrsSymbol};
pub use modem::{make_alphabet, DetectorKind, Scheme, SymbolAlphabet};
pub use montecarlo::{
    compare_receivers, replicate_measurement, run_ber_sweep, BerPoint, LinkScenario, ReplicateConfig, Source,
    SweepConfig, YModel,
};
pub use specfun::{log_bessel_i, q_func, q_inv, reg_inc_beta, LogDomainValue};
