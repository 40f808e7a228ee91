//! Mergeable accumulators and the report record every estimator returns.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Running mean and sum of squared deviations (Welford), mergeable with
/// Chan's pairwise update so per-worker partials combine exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2 + delta * delta * (self.count as f64 * other.count as f64 / total as f64);
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n - 1 denominator).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Sample standard deviation over `sqrt(n)`.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            return f64::INFINITY;
        }
        self.std_dev() / (self.count as f64).sqrt()
    }
}

/// Point estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EstimatorReport {
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    /// Seconds; filled in by the caller that owns a clock.
    pub wall_time: f64,
    pub metadata: BTreeMap<String, String>,
}

impl EstimatorReport {
    pub fn new(estimate: f64, stderr: f64, n_samples: u64, seed: u64) -> Self {
        Self { estimate, stderr, n_samples, seed, wall_time: 0.0, metadata: BTreeMap::new() }
    }

    pub fn from_mean(acc: &MeanAccumulator, seed: u64) -> Self {
        Self::new(acc.mean(), acc.stderr(), acc.count(), seed)
    }

    /// Multiplies estimate and error by a known constant.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.estimate *= factor;
        self.stderr *= factor.abs();
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// `|estimate - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.estimate - target).abs() / self.stderr
    }

    /// True if the estimate lies within `k` standard errors of `target`.
    /// An exact estimate (zero error) must match to rounding.
    pub fn within(&self, target: f64, k: f64) -> bool {
        let tol = (k * self.stderr).max(1e-12 * target.abs().max(1.0));
        (self.estimate - target).abs() <= tol
    }
}

/// `|a - b|` against `k` standard errors of the difference of two
/// independent estimates.
pub fn agree(a: &EstimatorReport, b: &EstimatorReport, k: f64) -> bool {
    let se = a.stderr.hypot(b.stderr);
    (a.estimate - b.estimate).abs() <= (k * se).max(1e-12 * a.estimate.abs().max(1.0))
}

/// Weighted least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_stderr: f64,
    pub slope_stderr: f64,
    /// `y_i - fit(x_i)` per input point.
    pub residuals: Vec<f64>,
}

impl LinearFit {
    /// Fits with weights `1 / sigma_i^2`; pass equal sigmas for ordinary
    /// least squares. Parameter errors come from the weighted normal
    /// equations, i.e. they treat `sigma_i` as known.
    pub fn weighted(xs: &[f64], ys: &[f64], sigmas: &[f64]) -> Self {
        assert!(xs.len() == ys.len() && ys.len() == sigmas.len() && xs.len() >= 2);
        let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&x, &y), &sigma) in xs.iter().zip(ys).zip(sigmas) {
            let w = 1.0 / (sigma * sigma);
            s += w;
            sx += w * x;
            sy += w * y;
            sxx += w * x * x;
            sxy += w * x * y;
        }
        let det = s * sxx - sx * sx;
        let slope = (s * sxy - sx * sy) / det;
        let intercept = (sxx * sy - sx * sxy) / det;
        let residuals = xs.iter().zip(ys).map(|(&x, &y)| y - intercept - slope * x).collect();
        Self {
            intercept,
            slope,
            intercept_stderr: (sxx / det).sqrt(),
            slope_stderr: (s / det).sqrt(),
            residuals,
        }
    }
}
