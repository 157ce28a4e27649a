use serde::{Deserialize, Serialize};

use super::{check_observation, AutotuneConfig, ConjugateModel};
use crate::error::{CpdError, Result};

const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Normal-Gamma posterior `(alpha, beta, kappa, mu)` for scalar observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalGammaParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub mu: f64,
}

impl NormalGammaParams {
    pub fn new(alpha: f64, beta: f64, kappa: f64, mu: f64) -> Result<Self> {
        let p = Self { alpha, beta, kappa, mu };
        p.check()?;
        Ok(p)
    }

    /// Hand-set hyperparameters used when auto-tuning is off:
    /// `alpha = 0.1, beta = 0.01, kappa = 1, mu = 0`.
    pub const fn fixed_default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.01,
            kappa: 1.0,
            mu: 0.0,
        }
    }

    fn check(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CpdError::config(format!(
                    "normal-gamma {name} must be finite and > 0; got {v}"
                )))
            }
        };
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("kappa", self.kappa)?;
        if !self.mu.is_finite() {
            return Err(CpdError::config(format!(
                "normal-gamma mu must be finite; got {}",
                self.mu
            )));
        }
        Ok(())
    }

    /// In-place update. Every formula reads the incoming `kappa` and `mu`.
    #[inline]
    pub fn observe(&mut self, x: f64) {
        let kappa = self.kappa;
        let resid = x - self.mu;
        self.alpha += 0.5;
        self.beta += kappa * resid * resid / (2.0 * (kappa + 1.0));
        self.mu = (kappa * self.mu + x) / (kappa + 1.0);
        self.kappa = kappa + 1.0;
    }

    /// Degrees of freedom of the Student-T predictive, `2 alpha`.
    pub fn predictive_dof(&self) -> f64 {
        2.0 * self.alpha
    }

    /// Squared scale of the predictive, `beta (kappa + 1) / (alpha kappa)`.
    pub fn predictive_scale_sq(&self) -> f64 {
        self.beta * (self.kappa + 1.0) / (self.alpha * self.kappa)
    }

    #[inline]
    pub fn logpdf(&self, x: f64) -> f64 {
        let nu = 2.0 * self.alpha;
        // nu * scale^2 = 2 beta (kappa + 1) / kappa
        let nu_scale_sq = 2.0 * self.beta * (self.kappa + 1.0) / self.kappa;
        let resid = x - self.mu;
        libm::lgamma(0.5 * (nu + 1.0))
            - libm::lgamma(0.5 * nu)
            - 0.5 * (LN_PI + nu_scale_sq.ln())
            - 0.5 * (nu + 1.0) * (resid * resid / nu_scale_sq).ln_1p()
    }
}

impl Default for NormalGammaParams {
    fn default() -> Self {
        Self::fixed_default()
    }
}

pub fn update_univariate(p: &NormalGammaParams, x: f64) -> Result<NormalGammaParams> {
    if !x.is_finite() {
        return Err(CpdError::input(format!("observation is not finite ({x})")));
    }
    let mut next = *p;
    next.observe(x);
    Ok(next)
}

pub fn predictive_logpdf_univariate(p: &NormalGammaParams, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(CpdError::input(format!("observation is not finite ({x})")));
    }
    Ok(p.logpdf(x))
}

impl ConjugateModel for NormalGammaParams {
    fn dim(&self) -> usize {
        1
    }

    fn validate(&self) -> Result<()> {
        self.check()
    }

    #[inline]
    fn update(&mut self, x: &[f64]) {
        self.observe(x[0]);
    }

    #[inline]
    fn predictive_logpdf(&self, x: &[f64]) -> Result<f64> {
        Ok(self.logpdf(x[0]))
    }

    fn autotune(samples: &[f64], dim: usize, cfg: &AutotuneConfig) -> Result<Self> {
        if dim != 1 {
            return Err(CpdError::config(format!(
                "univariate model cannot be tuned on {dim}-dimensional data"
            )));
        }
        for x in samples {
            check_observation(std::slice::from_ref(x), 1)?;
        }
        super::autotune_univariate(samples, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn update_matches_hand_evaluation() {
        let p = NormalGammaParams::new(0.1, 0.01, 1.0, 0.0).unwrap();
        let q = update_univariate(&p, 2.0).unwrap();
        assert_abs_diff_eq!(q.alpha, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(q.beta, 1.01, epsilon = 1e-15);
        assert_eq!(q.kappa, 2.0);
        assert_eq!(q.mu, 1.0);
    }

    #[test]
    fn zero_residual_leaves_beta_and_mu() {
        let p = NormalGammaParams::new(2.0, 3.0, 4.0, -1.5).unwrap();
        let q = update_univariate(&p, -1.5).unwrap();
        assert_eq!(q.beta, p.beta);
        assert_eq!(q.mu, p.mu);
        assert_eq!(q.alpha, 2.5);
        assert_eq!(q.kappa, 5.0);
    }

    #[test]
    fn predictive_at_unit_params() {
        let p = NormalGammaParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let lp = predictive_logpdf_univariate(&p, 0.0).unwrap();
        assert_abs_diff_eq!(lp.exp(), 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(lp, -1.386_294_361_119_890_6, epsilon = 1e-12);
    }

    #[test]
    fn predictive_approaches_normal() {
        let sigma2: f64 = 2.5;
        let big = 1.0e6;
        let p = NormalGammaParams::new(big, big * sigma2, big, 0.7).unwrap();
        for x in [-3.0, 0.0, 0.7, 2.0, 4.5] {
            let normal = -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln() - (x - 0.7_f64).powi(2) / (2.0 * sigma2);
            assert!((p.logpdf(x).exp() - normal.exp()).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn predictive_integrates_to_one() {
        let p = NormalGammaParams::new(2.0, 0.8, 2.0, 4.0).unwrap();
        let s = p.predictive_scale_sq().sqrt();
        let (lo, hi) = (p.mu - 50.0 * s, p.mu + 50.0 * s);
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        // composite Simpson
        let mut acc = p.logpdf(lo).exp() + p.logpdf(hi).exp();
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * p.logpdf(lo + i as f64 * h).exp();
        }
        let integral = acc * h / 3.0;
        assert!((integral - 1.0).abs() < 1e-4, "integral {integral}");
    }

    #[test]
    fn rejects_non_finite_observation() {
        let p = NormalGammaParams::default();
        assert!(matches!(update_univariate(&p, f64::NAN), Err(CpdError::Input(_))));
        assert!(matches!(
            predictive_logpdf_univariate(&p, f64::INFINITY),
            Err(CpdError::Input(_))
        ));
    }

    proptest! {
        #[test]
        fn beta_grows_and_kappa_increments(
            alpha in 0.01f64..50.0, beta in 0.001f64..100.0,
            kappa in 0.01f64..50.0, mu in -100.0f64..100.0, x in -1e3f64..1e3,
        ) {
            let p = NormalGammaParams::new(alpha, beta, kappa, mu).unwrap();
            let q = update_univariate(&p, x).unwrap();
            prop_assert!(q.beta >= p.beta);
            prop_assert_eq!(q.kappa, p.kappa + 1.0);
        }

        #[test]
        fn predictive_is_symmetric(
            alpha in 0.05f64..20.0, beta in 0.01f64..10.0,
            kappa in 0.1f64..10.0, mu in -10.0f64..10.0, delta in 0.0f64..50.0,
        ) {
            let p = NormalGammaParams::new(alpha, beta, kappa, mu).unwrap();
            let a = p.logpdf(mu + delta);
            let b = p.logpdf(mu - delta);
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
