//! Bernoulli shot sampling with a reproducible partition schedule.
//!
//! One estimator invocation owns one logical seed. Shots are split into
//! fixed-size partitions; partition `k` draws from a ChaCha stream derived
//! from `(seed, k)`, so partitions may be evaluated in any order (or in
//! parallel) and merging their counts reproduces the sequential result
//! bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{QadError, Result};

/// Shots per partition in the derived-seed schedule.
pub const PARTITION_SHOTS: u64 = 4096;

/// Mixes an estimator seed with a component index so that independent
/// estimates inside one run draw from unrelated streams (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for partition `k` of an estimator seeded with `seed`.
pub fn partition_rng(seed: u64, partition: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(partition);
    rng
}

/// Result of Bernoulli sampling: raw count, frequency estimate and the
/// Wald standard error `sqrt(p̂(1-p̂)/shots)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliSample {
    pub ones: u64,
    pub shots: u64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Samples `shots` Bernoulli trials with success probability `p`.
///
/// Deterministic under a fixed seed. `p` may carry floating-point slop of up
/// to 1e-12 outside `[0, 1]`; anything further is rejected.
pub fn sample_bernoulli(p: f64, shots: u64, seed: u64) -> Result<BernoulliSample> {
    if shots == 0 {
        return Err(QadError::precondition("qcore", "sample_bernoulli", "shots must be >= 1"));
    }
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(QadError::precondition(
            "qcore",
            "sample_bernoulli",
            format!("probability {p} outside [0, 1]"),
        ));
    }
    let p = p.clamp(0.0, 1.0);

    let mut ones = 0u64;
    let mut remaining = shots;
    let mut partition = 0u64;
    while remaining > 0 {
        let batch = remaining.min(PARTITION_SHOTS);
        let mut rng = partition_rng(seed, partition);
        let binom = Binomial::new(batch, p).expect("validated probability");
        ones += binom.sample(&mut rng);
        remaining -= batch;
        partition += 1;
    }

    let estimate = ones as f64 / shots as f64;
    let stderr = (estimate * (1.0 - estimate) / shots as f64).sqrt();
    Ok(BernoulliSample {
        ones,
        shots,
        estimate,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_probabilities() {
        let zero = sample_bernoulli(0.0, 1000, 1).unwrap();
        assert_eq!(zero.estimate, 0.0);
        let one = sample_bernoulli(1.0, 1000, 1).unwrap();
        assert_eq!(one.estimate, 1.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = sample_bernoulli(0.37, 10_000, 42).unwrap();
        let b = sample_bernoulli(0.37, 10_000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_bernoulli(0.37, 10_000, 43).unwrap();
        assert_ne!(a.ones, c.ones); // overwhelmingly likely
    }

    #[test]
    fn fair_coin_concentration() {
        // |estimate - 0.5| < 5/sqrt(shots) in at least 99 of 100 seeded runs
        let shots = 10_000u64;
        let bound = 5.0 / (shots as f64).sqrt();
        let hits = (0..100)
            .filter(|&seed| {
                let s = sample_bernoulli(0.5, shots, seed).unwrap();
                (s.estimate - 0.5).abs() < bound
            })
            .count();
        assert!(hits >= 99, "only {hits}/100 runs within bound");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(sample_bernoulli(0.5, 0, 1).is_err());
        assert!(sample_bernoulli(1.5, 10, 1).is_err());
        assert!(sample_bernoulli(-0.2, 10, 1).is_err());
    }
}
