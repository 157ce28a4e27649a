//! Conjugate observation models and prior auto-tuning.
//!
//! Both models share the same update rule; the multivariate variant replaces
//! the scalar `beta` with a symmetric positive-definite matrix. Predictive
//! densities are Student-T.

mod autotune;
mod mv_normal_gamma;
mod normal_gamma;

pub use autotune::{autotune, autotune_multivariate, autotune_univariate, AutotuneConfig};
pub use mv_normal_gamma::{predictive_logpdf_multivariate, update_multivariate, MvNormalGammaParams};
pub use normal_gamma::{predictive_logpdf_univariate, update_univariate, NormalGammaParams};

use crate::error::{CpdError, Result};

/// Posterior state of a run under a conjugate observation model.
///
/// Observations are passed as slices of length [`ConjugateModel::dim`].
/// Callers validate dimension and finiteness before `update`.
pub trait ConjugateModel: Clone + std::fmt::Debug + Send + 'static {
    fn dim(&self) -> usize;

    fn validate(&self) -> Result<()>;

    /// Fold one observation into the posterior.
    fn update(&mut self, x: &[f64]);

    /// Log-density of the posterior predictive at `x`.
    fn predictive_logpdf(&self, x: &[f64]) -> Result<f64>;

    /// Prior from a row-major block of warmup observations.
    fn autotune(samples: &[f64], dim: usize, cfg: &AutotuneConfig) -> Result<Self>;
}

/// Rejects observations of the wrong width or with non-finite components.
pub fn check_observation(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(CpdError::input(format!(
            "observation has dimension {}, detector expects {dim}",
            x.len()
        )));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(CpdError::input(format!(
            "observation component {i} is not finite ({})",
            x[i]
        )));
    }
    Ok(())
}
