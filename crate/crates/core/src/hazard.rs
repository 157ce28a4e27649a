use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};

/// Prior probability that the current run ends at the next observation.
///
/// Only the memoryless form is implemented: `H(tau) = 1 / lambda` for every
/// run length, where `lambda` is the expected run length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum HazardSpec {
    Constant { lambda: f64 },
}

impl HazardSpec {
    pub fn constant(lambda: f64) -> Result<Self> {
        let spec = Self::Constant { lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { lambda } => {
                // lambda < 1 would give a hazard above one.
                if !lambda.is_finite() || lambda < 1.0 {
                    return Err(CpdError::config(format!(
                        "hazard lambda must be finite and >= 1; got {lambda}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            Self::Constant { lambda } => lambda,
        }
    }

    /// Hazard probability `1 / lambda`.
    pub fn probability(&self) -> f64 {
        1.0 / self.lambda()
    }

    pub fn log_hazard(&self) -> f64 {
        -self.lambda().ln()
    }

    /// `ln(1 - H)`; `-inf` when `lambda == 1`.
    pub fn log_survival(&self) -> f64 {
        (-self.probability()).ln_1p()
    }

    /// `ln(H / (1 - H))`, the prior log odds of a change at any given step.
    pub fn log_prior_odds(&self) -> f64 {
        self.log_hazard() - self.log_survival()
    }
}

impl Default for HazardSpec {
    fn default() -> Self {
        Self::Constant { lambda: 250.0 }
    }
}

/// Hazard value for a spec, validating it first.
pub fn hazard(spec: &HazardSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.probability())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_hazard_values() {
        assert!((hazard(&HazardSpec::Constant { lambda: 250.0 }).unwrap() - 0.004).abs() < 1e-15);
        assert_eq!(hazard(&HazardSpec::Constant { lambda: 1.0 }).unwrap(), 1.0);
        assert_eq!(hazard(&HazardSpec::Constant { lambda: 2.0 }).unwrap(), 0.5);
    }

    #[test]
    fn rejects_non_positive_lambda() {
        for bad in [0.0, -3.0, f64::NAN, f64::INFINITY, 0.5] {
            assert!(HazardSpec::constant(bad).unwrap_err().is_config(), "{bad}");
        }
    }

    #[test]
    fn degenerate_survival_is_negative_infinity() {
        let h = HazardSpec::constant(1.0).unwrap();
        assert_eq!(h.log_hazard(), 0.0);
        assert_eq!(h.log_survival(), f64::NEG_INFINITY);
    }
}
