use thiserror::Error;

/// Errors raised by detectors, models, generators and metrics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CpdError {
    /// A parameter is outside its valid range.
    #[error("configuration error: {0}")]
    Config(String),
    /// An observation or input sequence was rejected. Detector state is left unchanged.
    #[error("input error: {0}")]
    Input(String),
    /// A factorization or density evaluation failed.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Snapshot encoding or decoding failed.
    #[error("snapshot error: {0}")]
    Snapshot(String),
}

impl CpdError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Self::Input(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self::Numerical(msg.into())
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Self::Config(_))
    }
}

pub type Result<T, E = CpdError> = std::result::Result<T, E>;
