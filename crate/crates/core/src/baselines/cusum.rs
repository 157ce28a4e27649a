use serde::{Deserialize, Serialize};

use super::BurnIn;
use crate::error::{CpdError, Result};

/// Two-sided tabular CUSUM settings. `k` and `h` are in units of the
/// burn-in standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CusumConfig {
    pub burn_in: usize,
    pub k: f64,
    pub h: f64,
}

impl Default for CusumConfig {
    fn default() -> Self {
        Self {
            burn_in: 100,
            k: 0.5,
            h: 4.0,
        }
    }
}

impl CusumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in == 0 {
            return Err(CpdError::config("CUSUM burn-in must be at least 1"));
        }
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(CpdError::config(format!("CUSUM k must be >= 0; got {}", self.k)));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(CpdError::config(format!("CUSUM h must be > 0; got {}", self.h)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumState {
    config: CusumConfig,
    t: u64,
    burn: BurnIn,
    estimates: Option<(f64, f64)>,
    s_plus: f64,
    s_minus: f64,
}

impl CusumState {
    pub fn new(config: CusumConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            t: 0,
            burn: BurnIn::default(),
            estimates: None,
            s_plus: 0.0,
            s_minus: 0.0,
        })
    }

    pub fn config(&self) -> &CusumConfig {
        &self.config
    }

    /// Current `(mu_hat, sigma_hat)`, or `None` during burn-in.
    pub fn estimates(&self) -> Option<(f64, f64)> {
        self.estimates
    }

    pub fn accumulators(&self) -> (f64, f64) {
        (self.s_plus, self.s_minus)
    }

    pub fn position(&self) -> u64 {
        self.t
    }

    /// Consumes one point; returns the global stream position on alarm.
    pub fn step(&mut self, x: f64) -> Result<Option<u64>> {
        if !x.is_finite() {
            return Err(CpdError::input(format!("observation is not finite ({x})")));
        }
        let t = self.t;
        self.t += 1;
        let Some((mu, sigma)) = self.estimates else {
            self.burn.push(x);
            if self.burn.count() >= self.config.burn_in {
                self.estimates = Some(self.burn.estimates());
            }
            return Ok(None);
        };
        let z = (x - mu) / sigma;
        self.s_plus = (self.s_plus + z - self.config.k).max(0.0);
        self.s_minus = (self.s_minus - z - self.config.k).max(0.0);
        if self.s_plus >= self.config.h || self.s_minus >= self.config.h {
            self.s_plus = 0.0;
            self.s_minus = 0.0;
            self.burn = BurnIn::default();
            self.estimates = None;
            return Ok(Some(t));
        }
        Ok(None)
    }

    pub fn run(&mut self, xs: &[f64]) -> Result<Vec<u64>> {
        let mut alarms = Vec::new();
        for &x in xs {
            alarms.extend(self.step(x)?);
        }
        Ok(alarms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_residual_alarms_on_fourth_point() {
        // burn-in on {-1, 0, 1}: mean 0, sd 1
        let mut c = CusumState::new(CusumConfig {
            burn_in: 3,
            k: 0.5,
            h: 4.0,
        })
        .unwrap();
        assert!(c.run(&[-1.0, 0.0, 1.0]).unwrap().is_empty());
        assert_eq!(c.estimates(), Some((0.0, 1.0)));
        let mut alarms = Vec::new();
        for _ in 0..4 {
            alarms.push(c.step(1.5).unwrap());
        }
        assert_eq!(alarms, vec![None, None, None, Some(6)]);
        assert!(c.estimates().is_none(), "burn-in restarts after an alarm");
        assert_eq!(c.accumulators(), (0.0, 0.0));
    }

    #[test]
    fn zero_residual_never_alarms() {
        let mut c = CusumState::new(CusumConfig::default()).unwrap();
        let xs: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { 3.0 }).collect();
        assert!(c.run(&xs).unwrap().is_empty());
        let mu = c.estimates().unwrap().0;
        assert!(c.run(&vec![mu; 5000]).unwrap().is_empty());
    }

    #[test]
    fn alarm_positions_are_global() {
        let mut c = CusumState::new(CusumConfig {
            burn_in: 10,
            k: 0.5,
            h: 4.0,
        })
        .unwrap();
        let mut xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 / 11.0).collect();
        xs.extend(std::iter::repeat_n(100.0, 5));
        let alarms = c.run(&xs).unwrap();
        assert_eq!(alarms, vec![50]);
    }

    #[test]
    fn downward_shift_uses_lower_accumulator() {
        let mut c = CusumState::new(CusumConfig {
            burn_in: 4,
            k: 0.5,
            h: 4.0,
        })
        .unwrap();
        c.run(&[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(c.step(-50.0).unwrap(), Some(4));
    }

    #[test]
    fn zero_variance_burn_in_uses_floor() {
        let mut c = CusumState::new(CusumConfig {
            burn_in: 3,
            k: 0.5,
            h: 4.0,
        })
        .unwrap();
        c.run(&[2.0, 2.0, 2.0]).unwrap();
        let (_, sigma) = c.estimates().unwrap();
        assert!(sigma > 0.0);
        assert_eq!(c.step(2.01).unwrap(), Some(3));
    }

    #[test]
    fn rejects_bad_config_and_input() {
        assert!(CusumState::new(CusumConfig {
            burn_in: 0,
            ..Default::default()
        })
        .is_err());
        assert!(CusumState::new(CusumConfig {
            h: 0.0,
            ..Default::default()
        })
        .is_err());
        let mut c = CusumState::new(CusumConfig::default()).unwrap();
        assert!(c.step(f64::NAN).is_err());
        assert_eq!(c.position(), 0);
    }
}
