//! Streaming control-chart baselines with burn-in re-estimation.
//!
//! Both charts estimate the in-control mean and standard deviation from the
//! first `burn_in` points, then monitor standardized residuals. After an alarm
//! the statistics reset and burn-in starts over on the following points.

mod cusum;
mod ewma;

pub use cusum::{CusumConfig, CusumState};
pub use ewma::{EwmaConfig, EwmaState};

use serde::{Deserialize, Serialize};

/// Standard deviation used when the burn-in variance is zero.
pub const SIGMA_FLOOR: f64 = 1e-4; // sqrt of the 1e-8 variance floor

/// Welford accumulator for burn-in estimates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub(crate) struct BurnIn {
    count: usize,
    mean: f64,
    m2: f64,
}

impl BurnIn {
    pub(crate) fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    /// Mean and floored standard deviation (unbiased when count >= 2).
    pub(crate) fn estimates(&self) -> (f64, f64) {
        let var = if self.count >= 2 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        };
        (self.mean, var.max(SIGMA_FLOOR * SIGMA_FLOOR).sqrt())
    }
}
