//! Run-length posterior over a bounded hypothesis buffer.

mod buffer;
mod detector;
mod regime;
mod snapshot;

pub use buffer::{RunLengthBuffer, RunLengthHypothesis};
pub use detector::{
    ChangepointEvent, Detector, DetectorConfig, MvDetector, PriorSpec, StepDiagnostics, StepOutcome, UnivariateDetector,
};
pub use snapshot::{decode_snapshot, encode_snapshot, SNAPSHOT_FORMAT, SNAPSHOT_VERSION};
