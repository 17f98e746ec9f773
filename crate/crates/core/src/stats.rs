//! Confidence intervals and goodness-of-fit tests for Monte Carlo estimates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sided standard normal quantile for `confidence` (e.g. 0.99 -> 2.5758).
pub fn z_for(confidence: f64) -> f64 {
    let n = Normal::standard();
    n.inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson(successes: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = z_for(confidence);
    let nf = n as f64;
    let phat = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (phat + z2 / (2.0 * nf)) / denom;
    let half = z * ((phat * (1.0 - phat) + z2 / (4.0 * nf)) / nf).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Streaming mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    /// Combines two disjoint samples.
    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }

    /// Unbiased sample variance; 0 below two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Normal-approximation interval `mean +- z s / sqrt(n)`.
    pub fn interval(&self, confidence: f64) -> (f64, f64) {
        if self.n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let half = z_for(confidence) * (self.variance() / self.n as f64).sqrt();
        (self.mean - half, self.mean + half)
    }
}

/// Upper-tail probability of a chi-square statistic.
pub fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    let d = ChiSquared::new(dof).expect("positive degrees of freedom");
    1.0 - d.cdf(stat)
}

/// Pearson statistic for a 0/1 split against 1/2 (one degree of freedom).
pub fn fair_split_statistic(zeros: u64, ones: u64) -> f64 {
    let n = (zeros + ones) as f64;
    let e = n / 2.0;
    let (a, b) = (zeros as f64 - e, ones as f64 - e);
    (a * a + b * b) / e
}
