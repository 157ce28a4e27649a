use rand::seq::index;
use rand::Rng;

use super::{segment_rng, StreamWithTruth};
use crate::error::{CpdError, Result};

// Outlier draws use their own ChaCha stream, far from the per-segment ones.
const OUTLIER_STREAM: u64 = u64::MAX - 1;

/// Replaces `floor(fraction * n)` distinct positions with spikes at
/// `segment mean ± magnitude_sigmas * segment sd`, one random sign per spike.
pub fn inject_outliers(
    stream: StreamWithTruth,
    fraction: f64,
    magnitude_sigmas: f64,
    seed: u64,
) -> Result<StreamWithTruth> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CpdError::config(format!(
            "outlier fraction must be in [0, 1]; got {fraction}"
        )));
    }
    if !magnitude_sigmas.is_finite() {
        return Err(CpdError::config("outlier magnitude must be finite"));
    }
    let n = stream.len();
    let count = (fraction * n as f64).floor() as usize;
    if count == 0 {
        return Ok(stream);
    }
    let mut out = stream;
    let mut rng = segment_rng(seed, OUTLIER_STREAM);
    let mut positions = index::sample(&mut rng, n, count).into_vec();
    positions.sort_unstable();
    let dim = out.dim;
    for &p in &positions {
        let seg = &out.segments[out.segment_of(p)].dist;
        let (mean, sd) = (seg.mean(), seg.sd());
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for j in 0..dim {
            out.observations[p * dim + j] = mean[j] + sign * magnitude_sigmas * sd[j];
        }
    }
    out.outliers = positions.into_iter().map(|p| p as u64).collect();
    Ok(out)
}
