use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::mv_normal_gamma::floor_alpha;
use super::{ConjugateModel, MvNormalGammaParams, NormalGammaParams};
use crate::error::{CpdError, Result};

/// Settings for estimating `beta0` and `mu0` from the first `warmup_size`
/// observations of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutotuneConfig {
    pub warmup_size: usize,
    pub alpha0: f64,
    pub kappa0: f64,
    /// Floor for the sample variance (and eigenvalue floor for the covariance).
    pub epsilon: f64,
}

impl Default for AutotuneConfig {
    fn default() -> Self {
        Self {
            warmup_size: 20,
            alpha0: 0.1,
            kappa0: 1.0,
            epsilon: 1e-8,
        }
    }
}

impl AutotuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_size < 2 {
            return Err(CpdError::config(format!(
                "warmup size must be >= 2 to estimate a variance; got {}",
                self.warmup_size
            )));
        }
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return Err(CpdError::config(format!("alpha0 must be > 0; got {}", self.alpha0)));
        }
        if !(self.kappa0.is_finite() && self.kappa0 > 0.0) {
            return Err(CpdError::config(format!("kappa0 must be > 0; got {}", self.kappa0)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CpdError::config(format!("epsilon must be > 0; got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// `mu0` is the sample mean and `beta0 = alpha0 kappa0 var / (kappa0 + 1)`
/// with `var` the unbiased sample variance floored at `epsilon`.
pub fn autotune_univariate(warmup: &[f64], cfg: &AutotuneConfig) -> Result<NormalGammaParams> {
    cfg.validate()?;
    if warmup.len() < 2 {
        return Err(CpdError::config(format!(
            "auto-tune needs at least 2 warmup samples; got {}",
            warmup.len()
        )));
    }
    let n = warmup.len() as f64;
    let mean = warmup.iter().sum::<f64>() / n;
    let var = warmup.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let var = var.max(cfg.epsilon);
    NormalGammaParams::new(
        cfg.alpha0,
        cfg.alpha0 * cfg.kappa0 * var / (cfg.kappa0 + 1.0),
        cfg.kappa0,
        mean,
    )
}

/// Matrix analogue of [`autotune_univariate`] over row-major `samples`.
///
/// The covariance gets `epsilon I` added when its smallest eigenvalue is below
/// `epsilon`, and `alpha0` is raised to `(d + 1) / 2` for `d >= 2`.
pub fn autotune_multivariate(samples: &[f64], dim: usize, cfg: &AutotuneConfig) -> Result<MvNormalGammaParams> {
    cfg.validate()?;
    if dim == 0 || !samples.len().is_multiple_of(dim) {
        return Err(CpdError::config("warmup block does not match the dimension"));
    }
    let rows = samples.len() / dim;
    if rows < 2 {
        return Err(CpdError::config(format!(
            "auto-tune needs at least 2 warmup samples; got {rows}"
        )));
    }
    let n = rows as f64;
    let mut mean = DVector::<f64>::zeros(dim);
    for row in samples.chunks_exact(dim) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean /= n;
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for row in samples.chunks_exact(dim) {
        for i in 0..dim {
            let ri = row[i] - mean[i];
            for j in 0..dim {
                cov[(i, j)] += ri * (row[j] - mean[j]);
            }
        }
    }
    cov /= n - 1.0;
    let smallest = cov.clone().symmetric_eigenvalues().min();
    if smallest < cfg.epsilon {
        for i in 0..dim {
            cov[(i, i)] += cfg.epsilon;
        }
    }
    let alpha0 = floor_alpha(cfg.alpha0, dim);
    let beta0 = cov * (alpha0 * cfg.kappa0 / (cfg.kappa0 + 1.0));
    MvNormalGammaParams::new(alpha0, beta0, cfg.kappa0, mean)
}

/// Dispatches to the model's own auto-tune for a row-major warmup block.
pub fn autotune<M: ConjugateModel>(samples: &[f64], dim: usize, cfg: &AutotuneConfig) -> Result<M> {
    M::autotune(samples, dim, cfg)
}
