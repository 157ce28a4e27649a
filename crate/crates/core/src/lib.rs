//! Budget-bounded Bayesian online changepoint detection.
//!
//! A [`Detector`] keeps at most `L` run-length hypotheses, so both memory and
//! work per observation are independent of how much of the stream has been
//! seen. Univariate data uses a Normal-Gamma model; multivariate data uses the
//! same update with a matrix-valued `beta`, which lets the detector see changes
//! in correlation structure.
//!
//! The crate also carries the pieces needed to evaluate detectors: streaming
//! CUSUM and EWMA baselines, seeded synthetic stream generators with ground
//! truth, and an absolute-error metric that penalizes missed and extra
//! detections.

#![forbid(unsafe_code)]

pub mod baselines;
pub mod datagen;
pub mod engine;
pub mod error;
pub mod hazard;
pub mod logmath;
pub mod metrics;
pub mod models;
pub mod transform;

pub use baselines::{CusumConfig, CusumState, EwmaConfig, EwmaState};
pub use datagen::{gen_piecewise, inject_outliers, DistSpec, Segment, StreamWithTruth};
pub use engine::{
    decode_snapshot, encode_snapshot, ChangepointEvent, Detector, DetectorConfig, MvDetector, PriorSpec,
    RunLengthBuffer, RunLengthHypothesis, StepDiagnostics, UnivariateDetector,
};
pub use error::{CpdError, Result};
pub use hazard::{hazard, HazardSpec};
pub use metrics::{mae_with_penalty, match_changepoints, MaeReport, PenaltyMode};
pub use models::{AutotuneConfig, ConjugateModel, MvNormalGammaParams, NormalGammaParams};
pub use transform::InputTransform;
