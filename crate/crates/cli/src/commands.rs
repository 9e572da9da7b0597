use anyhow::{anyhow, bail, ensure, Context, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ambc_core::channel::{from_db, to_db};
use ambc_core::coverage::enclosing_loop;
use ambc_core::{
    compare_receivers, compute_ber_grid, contour_export, exact_ber, fsk_coherent_ber, gaussian_ber, range_estimate,
    replicate_measurement, run_ber_sweep, BerEngine, BerPoint, ChannelSet, CoverageScenario, DetectionParams,
    DetectorKind, GridSpec, LinkScenario, PhaseModel, RangeEstimate, ReplicateConfig, Scheme, SeriesControl,
    SweepConfig, YModel,
};

use crate::args::{CoverageArgs, LinkArgs, ReplicateArgs, SimulateArgs, TheoryArgs};
use crate::output::{int, num, Table};

/// Tables from one subcommand; `complete` is false when some point failed.
pub struct Outcome {
    pub tables: Vec<Table>,
    pub complete: bool,
}

/// `start:step:stop` (inclusive) or a comma list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [a, step, b] => {
            let (a, step, b): (f64, f64, f64) = (a.trim().parse()?, step.trim().parse()?, b.trim().parse()?);
            ensure!(step > 0.0 && b >= a, "grid '{s}': need step > 0 and stop >= start");
            let n = ((b - a) / step + 1e-9).floor() as usize + 1;
            (0..n).map(|i| a + i as f64 * step).collect()
        }
        [_] => parse_list::<f64>(s)?,
        _ => bail!("grid '{s}': expected start:step:stop or a comma list"),
    };
    ensure!(
        !grid.is_empty() && grid.windows(2).all(|w| w[1] > w[0]),
        "grid '{s}' must be non-empty and strictly increasing"
    );
    Ok(grid)
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<T>().map_err(|e| anyhow!("'{}': {e}", t.trim())))
        .collect()
}

fn parse_pair(s: &str, what: &str) -> Result<[f64; 2]> {
    let v = parse_list::<f64>(s).with_context(|| format!("parsing {what}"))?;
    ensure!(v.len() == 2, "{what} needs two comma-separated numbers, got '{s}'");
    Ok([v[0], v[1]])
}

fn parse_return_loss(s: &str) -> Result<Option<(f64, f64)>> {
    if s.trim().eq_ignore_ascii_case("none") || s.trim().is_empty() {
        return Ok(None);
    }
    let [a, b] = parse_pair(s, "return-loss")?;
    Ok(Some((a, b)))
}

fn parse_iota(s: &str) -> Result<Complex64> {
    let v = parse_list::<f64>(s).context("parsing iota")?;
    match v.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => bail!("iota takes `re` or `re,im`, got '{s}'"),
    }
}

fn link_channel(l: &LinkArgs) -> Result<ChannelSet> {
    let mut ch = ChannelSet::from_attenuations(l.direct_db, l.scatter_db, l.scatter_phase, 1.0);
    if let Some((on, off)) = parse_return_loss(&l.return_loss)? {
        ch = ch.with_return_loss(on, off);
    }
    Ok(ch)
}

pub fn theory(a: &TheoryArgs) -> Result<Outcome> {
    let grid = parse_grid(&a.gamma)?;
    let base = link_channel(&a.link)?;
    let iota = a.iota.as_deref().map(parse_iota).transpose()?;
    let ctl = SeriesControl::default();
    let mut t = Table::new("theory", &["gamma_db", "gamma_b_db", "ber_exact", "ber_gaussian", "ber_fsk"]);
    let mut complete = true;
    for &g in &grid {
        let gamma = from_db(g);
        let (on_sq, off_sq, noise) = match iota {
            Some(i) => (gamma * (Complex64::ONE + i).norm_sqr(), gamma, 1.0),
            None => {
                let ch = base.with_lte_snr(gamma);
                (ch.h_on_sq(), ch.h_off_sq(), ch.noise_power)
            }
        };
        let p = DetectionParams::new(a.link.msc, a.link.n, on_sq, off_sq, noise)?.with_prior(a.link.prior)?;
        let exact = exact_ber(&p, &ctl).unwrap_or_else(|e| {
            eprintln!("warning: exact BER at {g} dB: {e}");
            complete = false;
            f64::NAN
        });
        let gb = p.snr_per_bit();
        t.push(vec![num(g), num(to_db(gb)), num(exact), num(gaussian_ber(&p)), num(fsk_coherent_ber(gb))]);
    }
    Ok(Outcome { tables: vec![t], complete })
}

fn sweep_config(a: &SimulateArgs, seed: u64, default_detectors: &str) -> Result<SweepConfig> {
    let y_model: YModel = a.y_model.parse()?;
    let cfg = SweepConfig {
        scenario: LinkScenario::Attenuation {
            direct_db: a.link.direct_db,
            scatter_db: a.link.scatter_db,
            scatter_phase_rad: a.link.scatter_phase,
        },
        return_loss_db: parse_return_loss(&a.link.return_loss)?,
        snr_grid_db: parse_grid(&a.gamma)?,
        n_symbols_per_point: a.realizations,
        schemes: parse_list::<Scheme>(&a.schemes)?,
        n_chips: a.link.n,
        detectors: parse_list::<DetectorKind>(a.detectors.as_deref().unwrap_or(default_detectors))?,
        m_sc: a.link.msc,
        prior_s0: a.link.prior,
        seed,
        fast_path: a.fast_path,
        y_model,
        series: SeriesControl::default(),
        with_theory: a.theory,
    };
    cfg.validate()?;
    Ok(cfg)
}

const POINT_HEADER: [&str; 10] =
    ["gamma_db", "gamma_b_db", "scheme", "receiver", "source", "ber", "n_errors", "n_bits", "ci_low", "ci_high"];

fn point_table(name: &str, points: &[BerPoint]) -> Table {
    let mut t = Table::new(name, &POINT_HEADER);
    for p in points {
        t.push(vec![
            num(p.gamma_db),
            num(p.gamma_b_db),
            p.scheme.to_string(),
            p.receiver.map(|r| r.to_string()).unwrap_or_default(),
            p.source.name().to_string(),
            num(p.ber),
            int(p.n_errors),
            int(p.n_bits),
            num(p.ci_low),
            num(p.ci_high),
        ]);
    }
    t
}

pub fn simulate(a: &SimulateArgs, seed: u64) -> Result<Outcome> {
    let cfg = sweep_config(a, seed, "correlation")?;
    let points = run_ber_sweep(&cfg)?;
    Ok(Outcome { tables: vec![point_table("simulate", &points)], complete: true })
}

pub fn compare(a: &SimulateArgs, seed: u64) -> Result<Outcome> {
    let cfg = sweep_config(a, seed, "correlation,square_root,power")?;
    let table = compare_receivers(&cfg)?;
    let mut d = Table::new(
        "compare_disagreement",
        &["gamma_db", "scheme", "receiver_a", "receiver_b", "disagreements", "n_bits", "rate"],
    );
    for x in &table.disagreements {
        d.push(vec![
            num(x.gamma_db),
            x.scheme.to_string(),
            x.a.to_string(),
            x.b.to_string(),
            int(x.count),
            int(x.n_bits),
            num(x.count as f64 / x.n_bits as f64),
        ]);
    }
    Ok(Outcome { tables: vec![point_table("compare", &table.points), d], complete: true })
}

fn coverage_scenario(a: &CoverageArgs) -> Result<CoverageScenario> {
    let bs = parse_pair(&a.bs, "bs")?;
    let ue = parse_pair(&a.ue, "ue")?;
    let grid = match a.window.trim() {
        "near" => GridSpec {
            x_min: ue[0] - 2.0,
            x_max: ue[0] + 2.0,
            y_min: ue[1] - 2.0,
            y_max: ue[1] + 2.0,
            resolution: a.resolution,
        },
        "far" => GridSpec {
            x_min: ue[0].min(bs[0]) - 5.0,
            x_max: ue[0].max(bs[0]) + 5.0,
            y_min: ue[1] - 15.0,
            y_max: ue[1] + 15.0,
            resolution: a.resolution,
        },
        other => {
            let v = parse_list::<f64>(other).context("parsing window")?;
            ensure!(v.len() == 4, "window takes near, far or x0,x1,y0,y1");
            GridSpec { x_min: v[0], x_max: v[1], y_min: v[2], y_max: v[3], resolution: a.resolution }
        }
    };
    let sc = CoverageScenario {
        bs_pos: bs,
        ue_pos: ue,
        carrier_freq_hz: a.freq_mhz * 1e6,
        gamma: from_db(a.gamma_db),
        m_sc: a.msc,
        n_chips: a.n,
        grid,
        engine: a.engine.parse::<BerEngine>()?,
        phase_model: a.phase_model.parse::<PhaseModel>()?,
    };
    sc.validate()?;
    Ok(sc)
}

pub fn coverage(a: &CoverageArgs, seed: u64) -> Result<Outcome> {
    let sc = coverage_scenario(a)?;
    let levels = parse_list::<f64>(&a.levels)?;
    ensure!(levels.iter().all(|l| *l > 0.0 && *l < 0.5), "contour levels must lie in (0, 0.5)");
    let ctl = SeriesControl::default();
    let grid = compute_ber_grid(&sc, &ctl)?;
    let mut complete = grid.failed_cells == 0;

    let mut g = Table::new("coverage_grid", &["x", "y", "ber"]);
    for (i, &y) in grid.y_axis.iter().enumerate() {
        for (j, &x) in grid.x_axis.iter().enumerate() {
            g.push(vec![num(x), num(y), num(grid.at(i, j))]);
        }
    }

    let lines = contour_export(&grid, &levels);
    let mut c = Table::new("coverage_contours", &["level", "line", "closed", "vertex", "x", "y"]);
    for (li, line) in lines.iter().enumerate() {
        for (vi, p) in line.points.iter().enumerate() {
            c.push(vec![num(line.level), int(li), int(u8::from(line.closed)), int(vi), num(p[0]), num(p[1])]);
        }
    }

    let lambda = sc.wavelength();
    let mut s = Table::new("coverage_summary", &["metric", "value"]);
    s.push(vec!["wavelength_m".into(), num(lambda)]);
    s.push(vec!["failed_cells".into(), num(grid.failed_cells as f64)]);
    let range = range_estimate(&sc, a.range_target, &ctl)?;
    s.push(vec!["range_target".into(), num(a.range_target)]);
    match &range {
        RangeEstimate::Found { radius_m, radius_wavelengths, worst_bearing_rad } => {
            s.push(vec!["range_m".into(), num(*radius_m)]);
            s.push(vec!["range_wavelengths".into(), num(*radius_wavelengths)]);
            s.push(vec!["range_worst_bearing_rad".into(), num(*worst_bearing_rad)]);
        }
        RangeEstimate::Unreachable { diagnostic } => {
            eprintln!("note: {diagnostic}");
            s.push(vec!["range_m".into(), num(f64::NAN)]);
            s.push(vec!["range_wavelengths".into(), num(f64::NAN)]);
        }
    }
    for &level in &levels {
        let circ = enclosing_loop(&lines, level, sc.ue_pos).map_or(f64::NAN, |l| l.circularity());
        s.push(vec![format!("circularity_{level}"), num(circ)]);
    }

    let mut tables = vec![g, c];
    if a.spot_checks > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let finite: Vec<usize> = (0..grid.ber.len()).filter(|&k| grid.ber[k].is_finite()).collect();
        ensure!(!finite.is_empty(), "no finite cells to spot-check");
        let mut sp = Table::new("coverage_spotcheck", &["x", "y", "ber_grid", "ber_exact", "rel_gap"]);
        let mut worst: f64 = 0.0;
        for _ in 0..a.spot_checks {
            let k = finite[rng.random_range(0..finite.len())];
            let (i, j) = (k / grid.nx(), k % grid.nx());
            let p = [grid.x_axis[j], grid.y_axis[i]];
            let exact = sc.ber_at_with(p, &ctl, BerEngine::Exact).unwrap_or_else(|e| {
                eprintln!("warning: exact spot check at {p:?}: {e}");
                complete = false;
                f64::NAN
            });
            let gap = (grid.ber[k] - exact).abs() / exact;
            worst = worst.max(gap);
            sp.push(vec![num(p[0]), num(p[1]), num(grid.ber[k]), num(exact), num(gap)]);
        }
        s.push(vec!["spot_checks".into(), num(a.spot_checks as f64)]);
        s.push(vec!["spot_max_rel_gap".into(), num(worst)]);
        tables.push(sp);
    }
    tables.push(s);
    Ok(Outcome { tables, complete })
}

pub fn replicate(a: &ReplicateArgs, seed: u64) -> Result<Outcome> {
    let hp = parse_list::<usize>(&a.half_periods)?;
    ensure!(hp.len() == 2, "half-periods takes two integers");
    let cfg = ReplicateConfig {
        n_packets: a.packets,
        gamma_b_db_min: a.gamma_b_min,
        gamma_b_db_max: a.gamma_b_max,
        bin_width_db: a.bin_width,
        m_sc: a.msc,
        n_chips: a.n,
        half_periods: (hp[0], hp[1]),
        idle_chips: a.idle_chips,
        scenario: LinkScenario::Attenuation {
            direct_db: a.direct_db,
            scatter_db: a.scatter_db,
            scatter_phase_rad: 0.0,
        },
        return_loss_db: parse_return_loss(&a.return_loss)?,
        normalize_energy: a.normalize_energy,
        seed,
    };
    let out = replicate_measurement(&cfg)?;

    let mut b = Table::new(
        "replicate_bins",
        &[
            "lo_db",
            "hi_db",
            "center_db",
            "n_packets",
            "n_errors",
            "n_bits",
            "ber",
            "ci_low",
            "ci_high",
            "theory_center",
            "theory_mean",
            "p_value",
        ],
    );
    for r in &out.bins {
        b.push(vec![
            num(r.lo_db),
            num(r.hi_db),
            num(r.center_db()),
            int(r.n_packets),
            int(r.n_errors),
            int(r.n_bits),
            num(r.ber),
            num(r.ci_low),
            num(r.ci_high),
            num(r.theory_center),
            num(r.theory_mean),
            num(r.p_value),
        ]);
    }
    let mut p = Table::new(
        "replicate_packets",
        &["index", "gamma_b_db", "true_offset", "sync_offset", "psr", "n_errors", "n_bits"],
    );
    for k in &out.packets {
        p.push(vec![
            int(k.index),
            num(k.gamma_b_db),
            int(k.true_offset),
            k.sync_offset.map(int).unwrap_or_default(),
            num(k.psr),
            int(k.n_errors),
            int(k.n_bits),
        ]);
    }
    if out.sync_failures > 0 {
        eprintln!("note: {} of {} packets failed to synchronise", out.sync_failures, cfg.n_packets);
    }
    Ok(Outcome { tables: vec![b, p], complete: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:5:20").unwrap(), vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        assert_eq!(parse_grid("-3,1.5").unwrap(), vec![-3.0, 1.5]);
        assert_eq!(parse_grid("0:0.1:1").unwrap().len(), 11);
        assert!(parse_grid("3,1").is_err());
        assert!(parse_grid("0:-1:5").is_err());
        assert!(parse_grid("a:b").is_err());
    }

    #[test]
    fn pairs_and_return_loss() {
        assert_eq!(parse_pair("50, 0", "bs").unwrap(), [50.0, 0.0]);
        assert!(parse_pair("1", "bs").is_err());
        assert_eq!(parse_return_loss("none").unwrap(), None);
        assert_eq!(parse_return_loss("0.5,23").unwrap(), Some((0.5, 23.0)));
        assert_eq!(parse_iota("0.1,-0.2").unwrap(), Complex64::new(0.1, -0.2));
    }
}
