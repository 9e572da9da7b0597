//! BER maps over backscatter-device positions with UE and BS fixed.

pub mod contour;

pub use contour::{marching_squares, ContourLine};

use rayon::prelude::*;

use crate::ber_theory::{ber_vs_gain_ratio, BerEngine, SeriesControl};
use crate::channel::{scatter_ratio, wavelength, LinkGeometry, Point};
use crate::error::{Error, Result};

pub const DEFAULT_LEVELS: [f64; 6] = [0.4, 0.3, 0.2, 0.1, 0.05, 0.01];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Points per axis.
    pub resolution: usize,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    // Written so that a symmetric interval gives exactly mirrored points.
    let d = (n - 1) as f64;
    (0..n).map(|i| (lo * (n - 1 - i) as f64 + hi * i as f64) / d).collect()
}

impl GridSpec {
    pub fn x_axis(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.resolution)
    }

    pub fn y_axis(&self) -> Vec<f64> {
        linspace(self.y_min, self.y_max, self.resolution)
    }
}

/// How the scattered path combines with the direct path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseModel {
    /// `|1 + ι|²` with the full geometric phase; shows interference fringes.
    #[default]
    Coherent,
    /// `(1 + |ι|)²`, the fringe envelope (best-case phase everywhere).
    Envelope,
}

impl std::str::FromStr for PhaseModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coherent" => Ok(PhaseModel::Coherent),
            "envelope" => Ok(PhaseModel::Envelope),
            other => Err(Error::InvalidConfig(format!("unknown phase model '{other}'"))),
        }
    }
}

impl std::fmt::Display for PhaseModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PhaseModel::Coherent => "coherent",
            PhaseModel::Envelope => "envelope",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageScenario {
    pub bs_pos: Point,
    pub ue_pos: Point,
    pub carrier_freq_hz: f64,
    /// LTE SNR, linear.
    pub gamma: f64,
    pub m_sc: usize,
    pub n_chips: usize,
    pub grid: GridSpec,
    pub engine: BerEngine,
    pub phase_model: PhaseModel,
}

impl CoverageScenario {
    /// UE at the origin, BS 50 m away, γ = 10 dB, 4 m × 4 m window around the UE.
    pub fn near_field(carrier_freq_hz: f64) -> Self {
        Self {
            bs_pos: [50.0, 0.0],
            ue_pos: [0.0, 0.0],
            carrier_freq_hz,
            gamma: 10.0,
            m_sc: 288,
            n_chips: 4,
            grid: GridSpec { x_min: -2.0, x_max: 2.0, y_min: -2.0, y_max: 2.0, resolution: 200 },
            engine: BerEngine::Gaussian,
            phase_model: PhaseModel::Coherent,
        }
    }

    /// Same link with a 60 m × 30 m window covering both ends.
    pub fn far_field(carrier_freq_hz: f64) -> Self {
        Self {
            grid: GridSpec { x_min: -5.0, x_max: 55.0, y_min: -15.0, y_max: 15.0, resolution: 200 },
            ..Self::near_field(carrier_freq_hz)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.resolution < 2 {
            return Err(Error::InvalidConfig("grid resolution must be at least 2".into()));
        }
        if !(self.grid.x_min < self.grid.x_max && self.grid.y_min < self.grid.y_max) {
            return Err(Error::InvalidConfig("grid bounds are empty".into()));
        }
        if !(self.gamma > 0.0 && self.carrier_freq_hz > 0.0) {
            return Err(Error::InvalidConfig("gamma and carrier must be positive".into()));
        }
        if self.bs_pos == self.ue_pos {
            return Err(Error::DegenerateGeometry("UE and BS coincide".into()));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_freq_hz)
    }

    /// Power ratio between the reflecting and absorbing states for a BD at `bd`.
    pub fn gain_ratio_at(&self, bd: Point) -> Result<f64> {
        let geom = LinkGeometry::new(self.bs_pos, self.ue_pos, bd)?;
        let iota = scatter_ratio(&geom, self.wavelength())?.iota;
        Ok(match self.phase_model {
            PhaseModel::Coherent => (num_complex::Complex64::ONE + iota).norm_sqr(),
            PhaseModel::Envelope => (1.0 + iota.norm()).powi(2),
        })
    }

    pub fn ber_at(&self, bd: Point, ctl: &SeriesControl) -> Result<f64> {
        self.ber_at_with(bd, ctl, self.engine)
    }

    pub fn ber_at_with(&self, bd: Point, ctl: &SeriesControl, engine: BerEngine) -> Result<f64> {
        ber_vs_gain_ratio(self.gain_ratio_at(bd)?, self.gamma, self.m_sc, self.n_chips, ctl, engine)
    }
}

/// Row-major BER samples; `ber[i * nx + j]` is at `(x_axis[j], y_axis[i])`.
/// Excluded cells (on top of the UE or BS, or failed evaluations) hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct BerGrid {
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    pub ber: Vec<f64>,
    pub failed_cells: usize,
}

impl BerGrid {
    pub fn nx(&self) -> usize {
        self.x_axis.len()
    }

    pub fn ny(&self) -> usize {
        self.y_axis.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.ber[i * self.nx() + j]
    }
}

pub fn compute_ber_grid(sc: &CoverageScenario, ctl: &SeriesControl) -> Result<BerGrid> {
    sc.validate()?;
    let xs = sc.grid.x_axis();
    let ys = sc.grid.y_axis();
    let dx = (sc.grid.x_max - sc.grid.x_min) / (xs.len() - 1) as f64;
    let dy = (sc.grid.y_max - sc.grid.y_min) / (ys.len() - 1) as f64;
    let covers = |p: Point, q: Point| (p[0] - q[0]).abs() < 0.5 * dx && (p[1] - q[1]).abs() < 0.5 * dy;

    let rows: Vec<(Vec<f64>, usize)> = ys
        .par_iter()
        .map(|&y| {
            let mut failed = 0;
            let row = xs
                .iter()
                .map(|&x| {
                    let p = [x, y];
                    if covers(p, sc.ue_pos) || covers(p, sc.bs_pos) {
                        return f64::NAN;
                    }
                    sc.ber_at(p, ctl).unwrap_or_else(|_| {
                        failed += 1;
                        f64::NAN
                    })
                })
                .collect();
            (row, failed)
        })
        .collect();
    let failed_cells = rows.iter().map(|r| r.1).sum();
    Ok(BerGrid { ber: rows.into_iter().flat_map(|r| r.0).collect(), x_axis: xs, y_axis: ys, failed_cells })
}

pub fn contour_export(grid: &BerGrid, levels: &[f64]) -> Vec<ContourLine> {
    levels.iter().flat_map(|&level| marching_squares(&grid.x_axis, &grid.y_axis, &grid.ber, level)).collect()
}

/// Smallest closed contour at `level` that encloses `center`.
pub fn enclosing_loop(lines: &[ContourLine], level: f64, center: Point) -> Option<&ContourLine> {
    lines.iter().filter(|l| l.level == level && l.contains(center)).min_by(|a, b| a.area().total_cmp(&b.area()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RangeEstimate {
    Found { radius_m: f64, radius_wavelengths: f64, worst_bearing_rad: f64 },
    Unreachable { diagnostic: String },
}

impl RangeEstimate {
    pub fn radius_m(&self) -> Option<f64> {
        match self {
            RangeEstimate::Found { radius_m, .. } => Some(*radius_m),
            RangeEstimate::Unreachable { .. } => None,
        }
    }
}

const RANGE_BEARINGS: usize = 720;

/// Worst BER over bearings on the UE-centred circle of radius `r`.
fn worst_on_circle(sc: &CoverageScenario, r: f64, ctl: &SeriesControl) -> Result<(f64, f64)> {
    let mut worst = (f64::NEG_INFINITY, 0.0);
    for k in 0..RANGE_BEARINGS {
        let theta = std::f64::consts::TAU * k as f64 / RANGE_BEARINGS as f64;
        let p = [sc.ue_pos[0] + r * theta.cos(), sc.ue_pos[1] + r * theta.sin()];
        let b = sc.ber_at(p, ctl)?;
        if b > worst.0 {
            worst = (b, theta);
        }
    }
    Ok(worst)
}

/// Radius of the largest UE-centred circle inside which every bearing
/// meets `ber_target`.
pub fn range_estimate(sc: &CoverageScenario, ber_target: f64, ctl: &SeriesControl) -> Result<RangeEstimate> {
    if !(ber_target > 0.0 && ber_target < 0.5) {
        return Err(crate::error::domain("range_estimate", "ber_target", ber_target));
    }
    sc.validate()?;
    let lambda = sc.wavelength();
    let d_d = (sc.bs_pos[0] - sc.ue_pos[0]).hypot(sc.bs_pos[1] - sc.ue_pos[1]);
    let r_min = lambda * 1e-3;
    let r_max = 0.9 * d_d;
    let min_step = lambda / 200.0;

    if worst_on_circle(sc, r_min, ctl)?.0 > ber_target {
        return Ok(RangeEstimate::Unreachable {
            diagnostic: format!("BER target {ber_target} is not met even at {r_min:.3e} m from the UE"),
        });
    }
    let mut good = r_min;
    let mut bad = None;
    let mut r = r_min;
    while r < r_max {
        r = (r + min_step.max(0.005 * r)).min(r_max);
        if worst_on_circle(sc, r, ctl)?.0 > ber_target {
            bad = Some(r);
            break;
        }
        good = r;
    }
    let Some(mut bad) = bad else {
        return Ok(RangeEstimate::Unreachable {
            diagnostic: format!("BER target {ber_target} holds on every circle up to {r_max:.3} m"),
        });
    };
    for _ in 0..50 {
        let mid = 0.5 * (good + bad);
        if worst_on_circle(sc, mid, ctl)?.0 > ber_target {
            bad = mid;
        } else {
            good = mid;
        }
    }
    let worst_bearing_rad = worst_on_circle(sc, bad, ctl)?.1;
    Ok(RangeEstimate::Found { radius_m: good, radius_wavelengths: good / lambda, worst_bearing_rad })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(freq: f64) -> CoverageScenario {
        let mut sc = CoverageScenario::near_field(freq);
        sc.grid.resolution = 41;
        sc
    }

    #[test]
    fn grid_mirror_symmetry_and_sentinels() {
        let sc = small(782e6);
        let g = compute_ber_grid(&sc, &SeriesControl::default()).unwrap();
        let (nx, ny) = (g.nx(), g.ny());
        for i in 0..ny {
            for j in 0..nx {
                let (a, b) = (g.at(i, j), g.at(ny - 1 - i, j));
                assert!(a.is_nan() == b.is_nan());
                if !a.is_nan() {
                    assert!((a - b).abs() < 1e-12);
                    assert!((0.0..=0.5).contains(&a));
                }
            }
        }
        assert_eq!(g.ber.iter().filter(|v| v.is_nan()).count(), 1);
        assert_eq!(g.failed_cells, 0);
    }

    #[test]
    fn far_cells_approach_chance() {
        let sc = CoverageScenario::far_field(782e6);
        let b = sc.ber_at([25.0, 500.0], &SeriesControl::default()).unwrap();
        assert!((0.5 - b).abs() < 1e-3, "{b}");
    }

    #[test]
    fn wavelength_scaling_invariance() {
        let sc = small(782e6);
        let k = 782.0 / 2560.0;
        let mut scaled = small(2560e6);
        scaled.bs_pos = [50.0 * k, 0.0];
        let ctl = SeriesControl::default();
        for &p in &[[0.3, 0.2], [-0.7, 1.1], [1.5, -0.4]] {
            let a = sc.ber_at(p, &ctl).unwrap();
            let b = scaled.ber_at([p[0] * k, p[1] * k], &ctl).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn range_monotone_in_target() {
        let mut sc = CoverageScenario::near_field(782e6);
        sc.phase_model = PhaseModel::Envelope;
        let ctl = SeriesControl::default();
        let radii: Vec<f64> =
            [1e-2, 0.1, 0.3].iter().map(|&t| range_estimate(&sc, t, &ctl).unwrap().radius_m().unwrap()).collect();
        assert!(radii.windows(2).all(|w| w[1] > w[0]), "{radii:?}");
        assert!(range_estimate(&sc, 0.5, &ctl).is_err());
    }
}
