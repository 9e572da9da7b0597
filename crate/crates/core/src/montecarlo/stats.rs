//! Interval estimates and tests for error counts, plus seed derivation.

use crate::specfun::reg_inc_beta;

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// `Pr(X ≤ k)` for `X ~ Binomial(n, p)`.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> f64 {
    if k >= n || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    reg_inc_beta(1.0 - p, (n - k) as f64, k as f64 + 1.0).unwrap_or(f64::NAN)
}

/// `Pr(X ≥ k)` for `X ~ Binomial(n, p)`.
pub fn binomial_sf_inclusive(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 || p >= 1.0 {
        return 1.0;
    }
    if k > n || p <= 0.0 {
        return 0.0;
    }
    reg_inc_beta(p, k as f64, (n - k + 1) as f64).unwrap_or(f64::NAN)
}

/// Two-sided exact binomial test p-value (doubled smaller tail).
pub fn binomial_test(k: u64, n: u64, p: f64) -> f64 {
    (2.0 * binomial_cdf(k, n, p).min(binomial_sf_inclusive(k, n, p))).min(1.0)
}

/// Standard error of a proportion estimate.
pub fn proportion_std_error(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = k as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Child seed for a path of indices under a master seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &i| splitmix64(acc ^ splitmix64(i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference() {
        // 10 successes in 100 trials.
        let (lo, hi) = wilson_interval(10, 100, Z95);
        assert!((lo - 0.055_229_4).abs() < 1e-6, "{lo}");
        assert!((hi - 0.174_366_2).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson_interval(0, 1000, Z95);
        assert!(lo < 1e-15);
        assert!(hi > 0.0 && hi < 0.004);
    }

    #[test]
    fn binomial_tails_sum_to_one() {
        let (n, p) = (80u64, 0.03);
        for k in 0..=n {
            let pmf = binomial_cdf(k, n, p) - if k > 0 { binomial_cdf(k - 1, n, p) } else { 0.0 };
            let tail = binomial_sf_inclusive(k, n, p);
            let below = if k > 0 { binomial_cdf(k - 1, n, p) } else { 0.0 };
            assert!((tail + below - 1.0).abs() < 1e-12);
            assert!(pmf >= -1e-15);
        }
        // P(X ≤ 2) for Binomial(10, 0.5) = 56/1024.
        assert!((binomial_cdf(2, 10, 0.5) - 56.0 / 1024.0).abs() < 1e-14);
        assert_eq!(binomial_test(5, 10, 0.5), 1.0);
        assert!(binomial_test(40, 100, 0.1) < 1e-10);
    }

    #[test]
    fn seeds_differ_by_path() {
        let a = derive_seed(1, &[0, 0]);
        assert_ne!(a, derive_seed(1, &[0, 1]));
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 0]));
        assert_eq!(a, derive_seed(1, &[0, 0]));
    }
}
