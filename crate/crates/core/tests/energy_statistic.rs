use ambc_core::lte_grid::{energy_moments, energy_statistic_direct, gen_srs_symbol, receive_symbol};
use ambc_core::{composite_gain, ChannelSet, SrsConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn channel() -> ChannelSet {
    ChannelSet::from_attenuations(-52.2, -82.6, 0.0, 1.0).with_lte_snr(10f64.powf(0.5))
}

fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[test]
fn per_re_and_direct_paths_share_a_law() {
    let ch = channel();
    let cfg = SrsConfig::default();
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for b in [1i8, -1] {
        let h = composite_gain(&ch, b).unwrap();
        let per_re: Vec<f64> = (0..n)
            .map(|l| {
                let sym = gen_srs_symbol(&cfg, l as u64, &mut rng);
                receive_symbol(&sym, h, ch.noise_power, &mut rng).unwrap().y
            })
            .collect();
        let direct: Vec<f64> =
            (0..n).map(|_| energy_statistic_direct(h, &cfg, ch.noise_power, &mut rng).unwrap().y).collect();
        // Two-sample critical value at alpha = 0.001.
        let crit = 1.949 * (2.0 / n as f64).sqrt();
        let d = ks_two_sample(per_re, direct);
        assert!(d < crit, "b={b}: D={d} crit={crit}");
    }
}

#[test]
fn per_re_moments_match_closed_form() {
    let ch = channel();
    let cfg = SrsConfig::default();
    let h = composite_gain(&ch, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 20_000;
    let ys: Vec<f64> = (0..n)
        .map(|l| {
            let sym = gen_srs_symbol(&cfg, l as u64, &mut rng);
            receive_symbol(&sym, h, ch.noise_power, &mut rng).unwrap().y
        })
        .collect();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let (m, v) = energy_moments(cfg.m_sc, h.norm_sqr(), ch.noise_power);
    assert!((mean / m - 1.0).abs() < 0.01, "{mean} vs {m}");
    assert!((var / v - 1.0).abs() < 0.05, "{var} vs {v}");
}
