//! Named stream recipes used by the acceptance suite, benches and `gen`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gen_piecewise, segment_rng, DistSpec, Segment, StreamWithTruth};
use crate::error::{CpdError, Result};

// Regime parameters come from a stream no segment will ever use.
const PARAM_STREAM: u64 = u64::MAX;

/// Consecutive regimes keep their centers at least this many combined
/// standard deviations apart, so every boundary is a real change.
pub const SEPARATION_SIGMAS: f64 = 5.0;

fn segment_lengths(n: usize, period: usize) -> Result<Vec<usize>> {
    if n == 0 || period == 0 {
        return Err(CpdError::config("n and period must be positive"));
    }
    let mut lens = vec![period; n / period];
    if !n.is_multiple_of(period) {
        lens.push(n % period);
    }
    Ok(lens)
}

fn separated<R: Rng>(rng: &mut R, prev: Option<(f64, f64)>, sd: f64) -> f64 {
    loop {
        let mean = rng.random_range(-50.0..50.0);
        match prev {
            Some((pm, psd)) if (mean - pm).abs() < SEPARATION_SIGMAS * (psd + sd) => continue,
            _ => return mean,
        }
    }
}

/// Normal regimes with `mean ~ U(-50, 50)` and `sd ~ U(0.5, 3)` redrawn every
/// `period` points.
pub fn normal_switch(n: usize, period: usize, seed: u64) -> Result<StreamWithTruth> {
    let lens = segment_lengths(n, period)?;
    let mut rng = segment_rng(seed, PARAM_STREAM);
    let mut prev = None;
    let segs: Vec<Segment> = lens
        .into_iter()
        .map(|len| {
            let sd = rng.random_range(0.5..3.0);
            let mean = separated(&mut rng, prev, sd);
            prev = Some((mean, sd));
            Segment::new(DistSpec::Normal { mean, sd }, len)
        })
        .collect();
    gen_piecewise(&segs, seed)
}

/// Alternates normal and uniform regimes every `period` points. Uniform
/// widths are drawn from `U(2, 12)`.
pub fn normal_uniform(n: usize, period: usize, seed: u64) -> Result<StreamWithTruth> {
    let lens = segment_lengths(n, period)?;
    let mut rng = segment_rng(seed, PARAM_STREAM);
    let mut prev = None;
    let segs: Vec<Segment> = lens
        .into_iter()
        .enumerate()
        .map(|(i, len)| {
            let dist = if i % 2 == 0 {
                let sd = rng.random_range(0.5..3.0);
                let mean = separated(&mut rng, prev, sd);
                prev = Some((mean, sd));
                DistSpec::Normal { mean, sd }
            } else {
                let width: f64 = rng.random_range(2.0..12.0);
                let sd = width / 12f64.sqrt();
                let mid = separated(&mut rng, prev, sd);
                prev = Some((mid, sd));
                DistSpec::Uniform {
                    low: mid - 0.5 * width,
                    high: mid + 0.5 * width,
                }
            };
            Segment::new(dist, len)
        })
        .collect();
    gen_piecewise(&segs, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonGaussianKind {
    Poisson,
    Gamma,
    LogNormal,
    Mixed,
}

impl NonGaussianKind {
    pub const ALL: [Self; 4] = [Self::Poisson, Self::Gamma, Self::LogNormal, Self::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Self::Poisson => "poisson",
            Self::Gamma => "gamma",
            Self::LogNormal => "lognormal",
            Self::Mixed => "mixed-gaussian",
        }
    }

    /// The two alternating regimes.
    pub fn regimes(self) -> (DistSpec, DistSpec) {
        match self {
            Self::Poisson => (DistSpec::Poisson { lambda: 2.0 }, DistSpec::Poisson { lambda: 10.0 }),
            Self::Gamma => (
                DistSpec::Gamma { shape: 2.0, scale: 2.0 },
                DistSpec::Gamma {
                    shape: 10.0,
                    scale: 10.0,
                },
            ),
            Self::LogNormal => (
                DistSpec::LogNormal { mu: 3.0, sigma: 1.0 },
                DistSpec::LogNormal { mu: 10.0, sigma: 1.0 },
            ),
            // Equal-weight components, each written as (mean, sd).
            Self::Mixed => (
                DistSpec::Mixture {
                    weights: vec![1.0; 3],
                    components: vec![(5.0, 1.0), (1.0, 1.3), (9.0, 1.3)],
                },
                DistSpec::Mixture {
                    weights: vec![1.0; 3],
                    components: vec![(50.0, 1.0), (5.0, 1.3), (9.0, 5.0)],
                },
            ),
        }
    }
}

impl std::str::FromStr for NonGaussianKind {
    type Err = CpdError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s || (s == "mixed" && *k == Self::Mixed))
            .ok_or_else(|| CpdError::config(format!("unknown non-gaussian kind '{s}'")))
    }
}

/// `n` points with `changepoints` evenly spaced boundaries, alternating the
/// two regimes of `kind`.
pub fn nongaussian(kind: NonGaussianKind, n: usize, changepoints: usize, seed: u64) -> Result<StreamWithTruth> {
    let parts = changepoints + 1;
    if n < parts {
        return Err(CpdError::config(format!(
            "{n} points cannot hold {changepoints} changepoints"
        )));
    }
    let (a, b) = kind.regimes();
    let bounds: Vec<usize> = (0..=parts)
        .map(|i| ((n * i) as f64 / parts as f64).round() as usize)
        .collect();
    let segs: Vec<Segment> = bounds
        .windows(2)
        .enumerate()
        .map(|(i, w)| Segment::new(if i % 2 == 0 { a.clone() } else { b.clone() }, w[1] - w[0]))
        .collect();
    gen_piecewise(&segs, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    Mean,
    Variance,
    Covariance,
}

impl DriftKind {
    pub const ALL: [Self; 3] = [Self::Mean, Self::Variance, Self::Covariance];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean-drift",
            Self::Variance => "var-drift",
            Self::Covariance => "cov-drift",
        }
    }

    pub fn regimes(self) -> (DistSpec, DistSpec) {
        let identity = DistSpec::MvNormal {
            mean: vec![1.0, 0.0],
            cov: vec![1.0, 0.0, 0.0, 1.0],
        };
        let after = match self {
            Self::Mean => DistSpec::MvNormal {
                mean: vec![10.0, 0.0],
                cov: vec![1.0, 0.0, 0.0, 1.0],
            },
            Self::Variance => DistSpec::MvNormal {
                mean: vec![1.0, 0.0],
                cov: vec![1.0, 0.0, 0.0, 10.0],
            },
            Self::Covariance => DistSpec::MvNormal {
                mean: vec![1.0, 0.0],
                cov: vec![1.0, 0.3, 0.3, 1.0],
            },
        };
        (identity, after)
    }
}

impl std::str::FromStr for DriftKind {
    type Err = CpdError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CpdError::config(format!("unknown drift kind '{s}'")))
    }
}

/// Two-dimensional stream of `2 * half` points with one change at `half`.
pub fn mv_drift(kind: DriftKind, half: usize, seed: u64) -> Result<StreamWithTruth> {
    let (a, b) = kind.regimes();
    gen_piecewise(&[Segment::new(a, half), Segment::new(b, half)], seed)
}

/// A single normal regime.
pub fn flat(n: usize, mean: f64, sd: f64, seed: u64) -> Result<StreamWithTruth> {
    gen_piecewise(&[Segment::new(DistSpec::Normal { mean, sd }, n)], seed)
}
