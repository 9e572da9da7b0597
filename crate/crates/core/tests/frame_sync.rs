use ambc_core::channel::noise_for_snr_per_bit;
use ambc_core::lte_grid::energy_statistic_direct;
use ambc_core::modem::framing::{encode_frame, frame_sync};
use ambc_core::modem::fsk_tones;
use ambc_core::{composite_gain, ChannelSet, SrsConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const IDLE: usize = 250;

/// Soft chips for a frame placed after a random idle lead, using the FSK
/// measurement alphabet at the given SNR per bit.
fn noisy_stream(gamma_b: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, usize) {
    let alphabet = fsk_tones(20, 2, 1).unwrap();
    let base = ChannelSet::from_attenuations(-52.2, -82.6, 0.0, 1.0).with_return_loss(0.5, 23.0);
    let noise = noise_for_snr_per_bit(base.h_on_sq(), base.h_off_sq(), 20, 288, gamma_b).unwrap();
    let ch = base.with_noise_power(noise);
    let cfg = SrsConfig::default();

    let payload: Vec<bool> = (0..80).map(|_| rng.random()).collect();
    let lead = rng.random_range(0..=IDLE);
    let mut chips = vec![-1i8; lead];
    chips.extend(encode_frame(&payload, &alphabet).unwrap());
    chips.extend(std::iter::repeat_n(-1i8, IDLE));

    let (h_on, h_off) = (composite_gain(&ch, 1).unwrap(), composite_gain(&ch, -1).unwrap());
    let mid = 288.0 * (noise + 0.5 * (ch.h_on_sq() + ch.h_off_sq()));
    let soft = chips
        .iter()
        .map(|&c| {
            let h = if c > 0 { h_on } else { h_off };
            energy_statistic_direct(h, &cfg, noise, rng).unwrap().y - mid
        })
        .collect();
    (soft, lead)
}

#[test]
fn locks_on_true_offset_at_10_db() {
    let alphabet = fsk_tones(20, 2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 1000;
    let hits = (0..trials)
        .filter(|_| {
            let (soft, lead) = noisy_stream(10.0, &mut rng);
            frame_sync(&soft, &alphabet).unwrap().offset() == Some(lead)
        })
        .count();
    assert!(hits * 100 >= trials * 99, "{hits}/{trials}");
}

#[test]
fn noise_only_stream_mostly_rejected() {
    let alphabet = fsk_tones(20, 2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 200;
    let locks = (0..trials)
        .filter(|_| {
            let v: Vec<f64> = (0..2520).map(|_| rng.random::<f64>() - 0.5).collect();
            frame_sync(&v, &alphabet).unwrap().offset().is_some()
        })
        .count();
    assert!(locks * 5 < trials, "{locks}");
}
