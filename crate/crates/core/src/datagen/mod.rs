//! Seeded synthetic streams with ground-truth changepoints.
//!
//! Every generator is a pure function of its arguments and seed. Segment `i`
//! draws from ChaCha8 stream `i` of the seed, so segments are independent of
//! one another and regeneration is bit-identical.

mod dist;
mod outliers;
mod presets;

pub use dist::DistSpec;
pub use outliers::inject_outliers;
pub use presets::{flat, mv_drift, nongaussian, normal_switch, normal_uniform, DriftKind, NonGaussianKind};

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub dist: DistSpec,
    pub len: usize,
}

impl Segment {
    pub fn new(dist: DistSpec, len: usize) -> Self {
        Self { dist, len }
    }
}

/// Observations (row-major, `dim` columns) with the first index of every
/// regime after the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamWithTruth {
    pub observations: Vec<f64>,
    pub dim: usize,
    pub truth: Vec<u64>,
    pub seed: u64,
    pub segments: Vec<Segment>,
    /// Positions overwritten by [`inject_outliers`], ascending.
    pub outliers: Vec<u64>,
}

impl StreamWithTruth {
    pub fn len(&self) -> usize {
        self.observations.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.observations[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.observations.chunks_exact(self.dim)
    }

    /// Index of the segment containing stream position `i`.
    pub fn segment_of(&self, i: usize) -> usize {
        self.truth.partition_point(|&b| b as usize <= i)
    }

    /// CSV with a header of `x0..x{d-1}`, one row per observation.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in self.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    w.write_all(b",")?;
                }
                first = false;
                write!(w, "{v}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// One changepoint index per line.
    pub fn write_truth<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in &self.truth {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }
}

pub(crate) fn segment_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Concatenates i.i.d. draws from each segment in order.
pub fn gen_piecewise(segments: &[Segment], seed: u64) -> Result<StreamWithTruth> {
    let first = segments
        .first()
        .ok_or_else(|| CpdError::config("at least one segment is required"))?;
    let dim = first.dist.dim();
    for (i, s) in segments.iter().enumerate() {
        if s.len == 0 {
            return Err(CpdError::config(format!("segment {i} has zero length")));
        }
        if s.dist.dim() != dim {
            return Err(CpdError::config(format!(
                "segment {i} has dimension {}, first segment has {dim}",
                s.dist.dim()
            )));
        }
        s.dist.validate()?;
    }
    let total: usize = segments.iter().map(|s| s.len).sum();
    let mut observations = Vec::with_capacity(total * dim);
    let mut truth = Vec::with_capacity(segments.len() - 1);
    for (i, s) in segments.iter().enumerate() {
        if i > 0 {
            truth.push((observations.len() / dim) as u64);
        }
        let mut rng = segment_rng(seed, i as u64);
        let sampler = s.dist.sampler()?;
        for _ in 0..s.len {
            sampler.sample_into(&mut rng, &mut observations);
        }
    }
    Ok(StreamWithTruth {
        observations,
        dim,
        truth,
        seed,
        segments: segments.to_vec(),
        outliers: Vec::new(),
    })
}
