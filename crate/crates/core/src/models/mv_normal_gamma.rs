use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{check_observation, AutotuneConfig, ConjugateModel};
use crate::error::{CpdError, Result};

const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Normal-Gamma posterior with a matrix-valued `beta` for `d`-dimensional
/// observations.
///
/// The update rule is the scalar one with the squared residual replaced by the
/// outer product of the residual. The predictive is a multivariate Student-T
/// with `2 alpha - d + 1` degrees of freedom and scale matrix
/// `2 beta (kappa + 1) / (kappa nu)`, which reduces to the scalar predictive
/// at `d = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvNormalGammaParams {
    pub alpha: f64,
    pub beta: DMatrix<f64>,
    pub kappa: f64,
    pub mu: DVector<f64>,
}

impl MvNormalGammaParams {
    pub fn new(alpha: f64, beta: DMatrix<f64>, kappa: f64, mu: DVector<f64>) -> Result<Self> {
        let p = Self { alpha, beta, kappa, mu };
        p.check()?;
        Ok(p)
    }

    /// Fixed hyperparameters `beta = beta0 I`, `mu = 0`, with `alpha` raised to
    /// `(d + 1) / 2` when `d >= 2` so that the predictive is proper.
    pub fn fixed(dim: usize, alpha: f64, beta: f64, kappa: f64, mu: f64) -> Result<Self> {
        Self::new(
            floor_alpha(alpha, dim),
            DMatrix::identity(dim, dim) * beta,
            kappa,
            DVector::from_element(dim, mu),
        )
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `2 alpha - d + 1`.
    pub fn predictive_dof(&self) -> f64 {
        2.0 * self.alpha - self.dim() as f64 + 1.0
    }

    /// Scale matrix of the predictive, `2 beta (kappa + 1) / (kappa nu)`.
    pub fn predictive_scale(&self) -> DMatrix<f64> {
        let nu = self.predictive_dof();
        &self.beta * (2.0 * (self.kappa + 1.0) / (self.kappa * nu))
    }

    fn check(&self) -> Result<()> {
        let d = self.mu.len();
        if d == 0 {
            return Err(CpdError::config("multivariate model needs dimension >= 1"));
        }
        if self.beta.nrows() != d || self.beta.ncols() != d {
            return Err(CpdError::config(format!(
                "beta is {}x{}, expected {d}x{d}",
                self.beta.nrows(),
                self.beta.ncols()
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(CpdError::config(format!(
                "alpha must be finite and > 0; got {}",
                self.alpha
            )));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(CpdError::config(format!(
                "kappa must be finite and > 0; got {}",
                self.kappa
            )));
        }
        if self.predictive_dof() <= 0.0 {
            return Err(CpdError::config(format!(
                "alpha = {} gives non-positive predictive degrees of freedom at d = {d}; need alpha > {}",
                self.alpha,
                (d as f64 - 1.0) / 2.0
            )));
        }
        if self.mu.iter().chain(self.beta.iter()).any(|v| !v.is_finite()) {
            return Err(CpdError::config("mu and beta entries must be finite"));
        }
        let scale = self.beta.amax().max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (self.beta[(i, j)] - self.beta[(j, i)]).abs() > 1e-12 * scale {
                    return Err(CpdError::config("beta must be symmetric"));
                }
            }
        }
        if Cholesky::new(self.beta.clone()).is_none() {
            return Err(CpdError::config("beta must be positive definite"));
        }
        Ok(())
    }

    /// In-place update using the incoming `kappa` and `mu` throughout.
    #[allow(clippy::needless_range_loop)]
    pub fn observe(&mut self, x: &[f64]) {
        let d = self.dim();
        let kappa = self.kappa;
        let w = kappa / (2.0 * (kappa + 1.0));
        for i in 0..d {
            let ri = x[i] - self.mu[i];
            for j in 0..d {
                let rj = x[j] - self.mu[j];
                self.beta[(i, j)] += w * (ri * rj);
            }
        }
        for i in 0..d {
            self.mu[i] = (kappa * self.mu[i] + x[i]) / (kappa + 1.0);
        }
        self.alpha += 0.5;
        self.kappa = kappa + 1.0;
    }

    pub fn logpdf(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        let df = d as f64;
        let nu = self.predictive_dof();
        let sigma = self.predictive_scale();
        let chol = factorize_with_jitter(sigma)?;
        let resid = DVector::from_iterator(d, x.iter().zip(self.mu.iter()).map(|(a, m)| a - m));
        let z = chol
            .l_dirty()
            .solve_lower_triangular(&resid)
            .ok_or_else(|| CpdError::numerical("triangular solve failed"))?;
        let maha = z.norm_squared();
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(libm::lgamma(0.5 * (nu + df))
            - libm::lgamma(0.5 * nu)
            - 0.5 * df * (nu.ln() + LN_PI)
            - 0.5 * log_det
            - 0.5 * (nu + df) * (maha / nu).ln_1p())
    }
}

fn factorize_with_jitter(sigma: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let d = sigma.nrows();
    let jitter = 1e-9 * sigma.trace() / d as f64;
    match Cholesky::new(sigma.clone()) {
        Some(c) => Ok(c),
        None => {
            let mut retry = sigma;
            for i in 0..d {
                retry[(i, i)] += jitter;
            }
            Cholesky::new(retry).ok_or_else(|| CpdError::numerical("predictive scale matrix is not positive definite"))
        }
    }
}

/// Lowest shape giving a proper predictive with at least two degrees of freedom.
pub(crate) fn floor_alpha(alpha: f64, dim: usize) -> f64 {
    if dim >= 2 {
        alpha.max((dim as f64 + 1.0) / 2.0)
    } else {
        alpha
    }
}

pub fn update_multivariate(p: &MvNormalGammaParams, x: &[f64]) -> Result<MvNormalGammaParams> {
    check_observation(x, p.dim())?;
    let mut next = p.clone();
    next.observe(x);
    Ok(next)
}

pub fn predictive_logpdf_multivariate(p: &MvNormalGammaParams, x: &[f64]) -> Result<f64> {
    check_observation(x, p.dim())?;
    p.logpdf(x)
}

impl ConjugateModel for MvNormalGammaParams {
    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn validate(&self) -> Result<()> {
        self.check()
    }

    fn update(&mut self, x: &[f64]) {
        self.observe(x);
    }

    fn predictive_logpdf(&self, x: &[f64]) -> Result<f64> {
        self.logpdf(x)
    }

    fn autotune(samples: &[f64], dim: usize, cfg: &AutotuneConfig) -> Result<Self> {
        if dim == 0 || !samples.len().is_multiple_of(dim) {
            return Err(CpdError::config(format!(
                "warmup block of {} values does not split into rows of {dim}",
                samples.len()
            )));
        }
        for row in samples.chunks_exact(dim) {
            check_observation(row, dim)?;
        }
        super::autotune_multivariate(samples, dim, cfg)
    }
}
