use std::hint::black_box;

use ambc_core::{
    doubly_noncentral_f_cdf, exact_ber, log_bessel_i, q_inv, reg_inc_beta, ChannelSet, DetectionParams, SeriesControl,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bessel(c: &mut Criterion) {
    let mut g = c.benchmark_group("log_bessel_i");
    for (order, x) in [(0u32, 2.5), (287, 150.0), (287, 4000.0), (1024, 1e-3)] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{order}@{x}")), &(order, x), |b, &(o, x)| {
            b.iter(|| log_bessel_i(black_box(o), black_box(x)))
        });
    }
    g.finish();
}

fn beta_and_q(c: &mut Criterion) {
    c.bench_function("reg_inc_beta 576,576", |b| {
        b.iter(|| reg_inc_beta(black_box(0.49), black_box(576.0), black_box(576.0)))
    });
    c.bench_function("q_inv 1e-6", |b| b.iter(|| q_inv(black_box(1e-6))));
}

fn series(c: &mut Criterion) {
    let ctl = SeriesControl::default();
    let mut g = c.benchmark_group("exact_ber");
    for gamma_db in [0.0, 10.0, 14.0] {
        let ch = ChannelSet::from_attenuations(-52.2, -82.6, 0.0, 1.0).with_lte_snr(10f64.powf(gamma_db / 10.0));
        let p = DetectionParams::new(288, 4, ch.h_on_sq(), ch.h_off_sq(), ch.noise_power).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(gamma_db), &p, |b, p| b.iter(|| exact_ber(black_box(p), &ctl)));
    }
    g.finish();
    c.bench_function("doubly_noncentral_f_cdf small", |b| {
        b.iter(|| doubly_noncentral_f_cdf(black_box(1.0), 4, 4, black_box(3.0), black_box(1.0), &ctl))
    });
}

criterion_group!(benches, bessel, beta_and_q, series);
criterion_main!(benches);
