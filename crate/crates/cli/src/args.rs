use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "ambc", version, about = "Ambient backscatter over LTE SRS: BER theory, Monte Carlo and coverage")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Common {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Flat key=value file; keys are long flag names. Flags on the command line win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "AMBC_OUT_DIR", default_value = "out")]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact, Gaussian and FSK theory curves over LTE SNR.
    Theory(TheoryArgs),
    /// Monte Carlo BER sweep with theory overlay.
    Simulate(SimulateArgs),
    /// Several detectors on common random numbers.
    Compare(SimulateArgs),
    /// BER map around the UE, contours and reading range.
    Coverage(CoverageArgs),
    /// Replay of the framed FSK measurement.
    Replicate(ReplicateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Theory(_) => "theory",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Coverage(_) => "coverage",
            Command::Replicate(_) => "replicate",
        }
    }

    pub const NAMES: [&'static str; 5] = ["theory", "simulate", "compare", "coverage", "replicate"];
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct LinkArgs {
    #[arg(long, default_value_t = 288)]
    pub msc: usize,
    /// Chips per BD symbol.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = -52.2, allow_hyphen_values = true)]
    pub direct_db: f64,
    #[arg(long, default_value_t = -82.6, allow_hyphen_values = true)]
    pub scatter_db: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub scatter_phase: f64,
    /// Measured (reflect, absorb) return losses in dB, e.g. `0.5,23`, or `none`.
    #[arg(long, default_value = "none")]
    pub return_loss: String,
    #[arg(long, default_value_t = 0.5)]
    pub prior: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TheoryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub link: LinkArgs,
    /// LTE SNR grid in dB: `start:step:stop` or a comma list.
    #[arg(long, default_value = "0:1:20", allow_hyphen_values = true)]
    pub gamma: String,
    /// Scatter ratio `re` or `re,im`; replaces the path attenuations when set.
    #[arg(long, allow_hyphen_values = true)]
    pub iota: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub link: LinkArgs,
    #[arg(long, default_value = "0:1:20", allow_hyphen_values = true)]
    pub gamma: String,
    /// Symbols per SNR point.
    #[arg(long, alias = "symbols", default_value_t = 10_000)]
    pub realizations: usize,
    /// Comma list of bpsk, fsk, dbpsk.
    #[arg(long, default_value = "bpsk")]
    pub schemes: String,
    /// Comma list of bessel_map, square_root, correlation, power.
    #[arg(long)]
    pub detectors: Option<String>,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub fast_path: bool,
    /// chi_square or gaussian.
    #[arg(long, default_value = "chi_square")]
    pub y_model: String,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub theory: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CoverageArgs {
    #[arg(long, default_value_t = 782.0)]
    pub freq_mhz: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub gamma_db: f64,
    #[arg(long, default_value = "50,0", allow_hyphen_values = true)]
    pub bs: String,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub ue: String,
    #[arg(long, default_value_t = 288)]
    pub msc: usize,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// `near` (4 m square around the UE), `far` (60 m × 30 m), or `x0,x1,y0,y1`.
    #[arg(long, default_value = "near", allow_hyphen_values = true)]
    pub window: String,
    /// Points per axis.
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    /// gaussian or exact.
    #[arg(long, default_value = "gaussian")]
    pub engine: String,
    /// coherent or envelope.
    #[arg(long, default_value = "coherent")]
    pub phase_model: String,
    /// Comma list of contour levels.
    #[arg(long, default_value = "0.4,0.3,0.2,0.1,0.05,0.01")]
    pub levels: String,
    #[arg(long, default_value_t = 1e-2)]
    pub range_target: f64,
    /// Random cells re-evaluated with the exact engine.
    #[arg(long, default_value_t = 0)]
    pub spot_checks: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReplicateArgs {
    #[arg(long, default_value_t = 2000)]
    pub packets: usize,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub gamma_b_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub gamma_b_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub bin_width: f64,
    #[arg(long, default_value_t = 288)]
    pub msc: usize,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Tone half-periods in chips for the two symbols.
    #[arg(long, default_value = "2,1")]
    pub half_periods: String,
    #[arg(long, default_value_t = 250)]
    pub idle_chips: usize,
    #[arg(long, default_value_t = -52.2, allow_hyphen_values = true)]
    pub direct_db: f64,
    #[arg(long, default_value_t = -82.6, allow_hyphen_values = true)]
    pub scatter_db: f64,
    #[arg(long, default_value = "0.5,23")]
    pub return_loss: String,
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub normalize_energy: bool,
}
