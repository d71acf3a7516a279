//! Small statistics helpers shared by the Monte Carlo harnesses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent RNG stream `index` derived from a master seed. Streams with
/// different indices never overlap, so per-trial and per-restart work can be
/// scheduled in any order without changing results.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median; the average of the two central values for even lengths.
/// Panics on empty input.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Standard deviation of an empirical fraction over `trials` Bernoulli(p) draws.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Locale-independent rendering rounded to `digits` significant digits,
/// printed in the shortest form that round-trips the rounded value.
pub fn format_significant(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x);
    if rounded == 0.0 {
        return "0".to_string();
    }
    format!("{rounded}")
}
