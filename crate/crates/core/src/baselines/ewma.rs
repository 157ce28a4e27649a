use serde::{Deserialize, Serialize};

use super::BurnIn;
use crate::error::{CpdError, Result};

/// EWMA control chart settings: smoothing weight and control-limit width in
/// units of the burn-in standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwmaConfig {
    pub burn_in: usize,
    pub weight: f64,
    pub limit: f64,
}

impl Default for EwmaConfig {
    fn default() -> Self {
        Self {
            burn_in: 100,
            weight: 0.1,
            limit: 3.0,
        }
    }
}

impl EwmaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in == 0 {
            return Err(CpdError::config("EWMA burn-in must be at least 1"));
        }
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            return Err(CpdError::config(format!(
                "EWMA weight must be in (0, 1]; got {}",
                self.weight
            )));
        }
        if !(self.limit.is_finite() && self.limit > 0.0) {
            return Err(CpdError::config(format!("EWMA limit must be > 0; got {}", self.limit)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwmaState {
    config: EwmaConfig,
    t: u64,
    burn: BurnIn,
    estimates: Option<(f64, f64)>,
    z: f64,
    /// Points monitored since the last burn-in.
    monitored: u32,
}

impl EwmaState {
    pub fn new(config: EwmaConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            t: 0,
            burn: BurnIn::default(),
            estimates: None,
            z: 0.0,
            monitored: 0,
        })
    }

    pub fn smoothed(&self) -> f64 {
        self.z
    }

    pub fn estimates(&self) -> Option<(f64, f64)> {
        self.estimates
    }

    /// Half-width of the control band after `i` monitored points.
    pub fn control_limit(&self, sigma: f64, i: u32) -> f64 {
        let w = self.config.weight;
        let decay = 1.0 - (1.0 - w).powi(2 * i as i32);
        self.config.limit * sigma * (w / (2.0 - w) * decay).sqrt()
    }

    pub fn step(&mut self, x: f64) -> Result<Option<u64>> {
        if !x.is_finite() {
            return Err(CpdError::input(format!("observation is not finite ({x})")));
        }
        let t = self.t;
        self.t += 1;
        let Some((mu, sigma)) = self.estimates else {
            self.burn.push(x);
            if self.burn.count() >= self.config.burn_in {
                let est = self.burn.estimates();
                self.estimates = Some(est);
                self.z = est.0;
                self.monitored = 0;
            }
            return Ok(None);
        };
        let w = self.config.weight;
        self.z = w * x + (1.0 - w) * self.z;
        self.monitored = self.monitored.saturating_add(1);
        if (self.z - mu).abs() > self.control_limit(sigma, self.monitored) {
            self.burn = BurnIn::default();
            self.estimates = None;
            self.monitored = 0;
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
