//! Pinned random number generation.
//!
//! Every stochastic step in the toolkit draws from [`ExperimentRng`], which is
//! xoshiro256** seeded from a `u64` through SplitMix64 (the reference seeding
//! procedure of the xoshiro authors). Bounded integers use rejection sampling
//! on the raw 64-bit output, so sampled index sets depend only on the seed and
//! not on the version of any sampling library:
//!
//! ```text
//! below(n): zone = u64::MAX - (u64::MAX % n)   // reject x >= zone
//!           loop { x = next_u64(); if x < zone { return x % n } }
//! ```
//!
//! Per-trial seeds come from [`trial_seed`], a SplitMix64 finalizer applied to
//! `master + (trial + 1) * 0x9e3779b97f4a7c15`, so adding trials never changes
//! the seeds of earlier ones.

use rand::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256StarStar;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `trial` derived from an invocation's master seed.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master.wrapping_add(trial.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone)]
pub struct ExperimentRng {
    inner: Xoshiro256StarStar,
}

impl ExperimentRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.inner.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Partial Fisher–Yates: the first `k` elements of `items` become a
    /// uniform sample without replacement, in sampled order.
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], k: usize) {
        let n = items.len();
        for i in 0..k.min(n) {
            let j = i + self.below((n - i) as u64) as usize;
            items.swap(i, j);
        }
    }
}
