use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};

/// Element-wise preprocessing applied to observations before detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputTransform {
    #[default]
    None,
    /// Natural log; inputs must be strictly positive.
    Log,
}

impl InputTransform {
    pub fn apply(&self, x: &mut [f64]) -> Result<()> {
        match self {
            Self::None => Ok(()),
            Self::Log => {
                if let Some(v) = x.iter().find(|v| v.is_nan() || **v <= 0.0) {
                    return Err(CpdError::input(format!("log transform needs positive input; got {v}")));
                }
                x.iter_mut().for_each(|v| *v = v.ln());
                Ok(())
            }
        }
    }
}

impl std::str::FromStr for InputTransform {
    type Err = CpdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "log" => Ok(Self::Log),
            other => Err(CpdError::config(format!(
                "unknown transform {other:?} (expected none|log)"
            ))),
        }
    }
}
