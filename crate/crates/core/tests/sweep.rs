use ambc_core::montecarlo::stats::binomial_test;
use ambc_core::{compare_receivers, run_ber_sweep, BerPoint, DetectorKind, LinkScenario, Scheme, Source, SweepConfig};

fn sims(points: &[BerPoint]) -> Vec<&BerPoint> {
    points.iter().filter(|p| p.source == Source::Simulation).collect()
}

#[test]
fn error_counts_consistent_with_exact_theory() {
    let cfg =
        SweepConfig { snr_grid_db: vec![0.0, 4.0, 8.0, 12.0], n_symbols_per_point: 5000, ..SweepConfig::default() };
    let pts = run_ber_sweep(&cfg).unwrap();
    for s in sims(&pts) {
        let th = pts.iter().find(|p| p.source == Source::TheoryExact && p.gamma_db == s.gamma_db).unwrap();
        let pv = binomial_test(s.n_errors, s.n_bits, th.ber);
        assert!(pv > 1e-3, "γ={} sim={} theory={} p={pv}", s.gamma_db, s.ber, th.ber);
    }
}

#[test]
fn high_snr_end_is_below_1e3() {
    let cfg = SweepConfig { snr_grid_db: vec![20.0], ..SweepConfig::default() };
    let pts = run_ber_sweep(&cfg).unwrap();
    assert!(sims(&pts)[0].ber < 1e-3);
    let th = pts.iter().find(|p| p.source == Source::TheoryExact).unwrap();
    assert!(th.ber < 1e-3);
}

#[test]
fn missing_scatter_path_is_a_coin_flip() {
    let cfg = SweepConfig {
        scenario: LinkScenario::Attenuation { direct_db: -52.2, scatter_db: f64::NEG_INFINITY, scatter_phase_rad: 0.0 },
        snr_grid_db: vec![10.0],
        n_symbols_per_point: 10_000,
        ..SweepConfig::default()
    };
    let pts = run_ber_sweep(&cfg).unwrap();
    let s = sims(&pts)[0];
    let sd = (0.25 / s.n_bits as f64).sqrt();
    assert!((s.ber - 0.5).abs() < 3.0 * sd, "{}", s.ber);
}

#[test]
fn bpsk_beats_fsk_at_equal_lte_snr() {
    let cfg = SweepConfig {
        snr_grid_db: vec![2.0, 6.0, 10.0],
        schemes: vec![Scheme::Bpsk, Scheme::Fsk],
        ..SweepConfig::default()
    };
    let pts = run_ber_sweep(&cfg).unwrap();
    for g in &cfg.snr_grid_db {
        let at = |sc| *sims(&pts).iter().find(|p| p.gamma_db == *g && p.scheme == sc).unwrap();
        let (b, f) = (at(Scheme::Bpsk), at(Scheme::Fsk));
        assert!(b.ci_high < f.ci_low || b.ber < f.ber, "γ={g}: bpsk {} fsk {}", b.ber, f.ber);
    }
}

#[test]
fn per_re_path_agrees_with_fast_path() {
    let base = SweepConfig {
        snr_grid_db: vec![0.0, 6.0],
        n_symbols_per_point: 2000,
        with_theory: false,
        ..SweepConfig::default()
    };
    let fast = run_ber_sweep(&base).unwrap();
    let slow = run_ber_sweep(&SweepConfig { fast_path: false, seed: 99, ..base.clone() }).unwrap();
    for (a, b) in fast.iter().zip(&slow) {
        let se = (a.ber * (1.0 - a.ber) / a.n_bits as f64 + b.ber * (1.0 - b.ber) / b.n_bits as f64).sqrt();
        assert!((a.ber - b.ber).abs() < 3.5 * se.max(1e-4), "γ={}: {} vs {}", a.gamma_db, a.ber, b.ber);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = SweepConfig {
        snr_grid_db: vec![3.0, 7.0],
        n_symbols_per_point: 3500,
        detectors: vec![DetectorKind::Correlation, DetectorKind::Power],
        ..SweepConfig::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| compare_receivers(&cfg).unwrap())
    };
    assert_eq!(run(1), run(4));
    assert_eq!(run(3), compare_receivers(&cfg).unwrap());
}

#[test]
fn dbpsk_has_no_theory_rows() {
    let cfg = SweepConfig {
        snr_grid_db: vec![8.0],
        schemes: vec![Scheme::Dbpsk],
        n_symbols_per_point: 1000,
        ..SweepConfig::default()
    };
    let pts = run_ber_sweep(&cfg).unwrap();
    assert!(pts.iter().all(|p| p.source == Source::Simulation));
    assert!(pts[0].ber < 0.2);
}
