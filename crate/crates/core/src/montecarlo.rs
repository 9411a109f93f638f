//! Seeded-stream plumbing shared by every Monte Carlo driver.
//!
//! All experiments derive one independent ChaCha stream per trial from
//! `(master seed, trial index)`, so results are a pure function of the seed
//! and never depend on aggregation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Independent random stream for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A Monte Carlo estimate: sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Running sums for one scalar sequence.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Sample variance (n−1 denominator), clamped at zero against roundoff.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean(),
            stderr: (self.variance() / self.n as f64).sqrt(),
        }
    }
}

/// Running sums for a paired sequence `(a, b)`, for ratio-of-means estimates.
#[derive(Debug, Clone, Copy, Default)]
pub struct PairedAccumulator {
    n: u64,
    a: Accumulator,
    b: Accumulator,
    sum_ab: f64,
}

impl PairedAccumulator {
    pub fn push(&mut self, a: f64, b: f64) {
        self.n += 1;
        self.a.push(a);
        self.b.push(b);
        self.sum_ab += a * b;
    }

    pub fn a(&self) -> Estimate {
        self.a.estimate()
    }

    pub fn b(&self) -> Estimate {
        self.b.estimate()
    }

    fn covariance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        (self.sum_ab - self.a.sum * self.b.sum / n) / (n - 1.0)
    }

    /// Ratio of means `Ā/B̄` with a delta-method standard error.
    pub fn ratio(&self) -> Estimate {
        let a_bar = self.a.mean();
        let b_bar = self.b.mean();
        let r = a_bar / b_bar;
        let var =
            (self.a.variance() + r * r * self.b.variance() - 2.0 * r * self.covariance()).max(0.0);
        Estimate {
            mean: r,
            stderr: (var / self.n as f64).sqrt() / b_bar.abs(),
        }
    }
}
