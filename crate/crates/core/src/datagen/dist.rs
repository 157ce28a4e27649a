use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal, Poisson, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};

/// Distribution of one stream segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistSpec {
    Normal {
        mean: f64,
        sd: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Poisson {
        lambda: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// Gaussian mixture with `(mean, sd)` components.
    Mixture {
        weights: Vec<f64>,
        components: Vec<(f64, f64)>,
    },
    /// Row-major covariance.
    MvNormal {
        mean: Vec<f64>,
        cov: Vec<f64>,
    },
}

fn finite_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CpdError::config(format!("{name} must be finite and > 0; got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CpdError::config(format!("{name} must be finite; got {v}")))
    }
}

impl DistSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::MvNormal { mean, .. } => mean.len(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Normal { mean, sd } => {
                finite("normal mean", *mean)?;
                finite_positive("normal sd", *sd)
            }
            Self::Uniform { low, high } => {
                finite("uniform low", *low)?;
                finite("uniform high", *high)?;
                if low < high {
                    Ok(())
                } else {
                    Err(CpdError::config(format!(
                        "uniform needs low < high; got [{low}, {high}]"
                    )))
                }
            }
            Self::Poisson { lambda } => finite_positive("poisson lambda", *lambda),
            Self::Gamma { shape, scale } => {
                finite_positive("gamma shape", *shape)?;
                finite_positive("gamma scale", *scale)
            }
            Self::LogNormal { mu, sigma } => {
                finite("lognormal mu", *mu)?;
                finite_positive("lognormal sigma", *sigma)
            }
            Self::Mixture { weights, components } => {
                if weights.is_empty() || weights.len() != components.len() {
                    return Err(CpdError::config("mixture needs one weight per component"));
                }
                for w in weights {
                    if !(w.is_finite() && *w >= 0.0) {
                        return Err(CpdError::config(format!("mixture weight {w} is invalid")));
                    }
                }
                if weights.iter().sum::<f64>() <= 0.0 {
                    return Err(CpdError::config("mixture weights sum to zero"));
                }
                for (m, s) in components {
                    finite("mixture mean", *m)?;
                    finite_positive("mixture sd", *s)?;
                }
                Ok(())
            }
            Self::MvNormal { mean, cov } => {
                let d = mean.len();
                if d == 0 || cov.len() != d * d {
                    return Err(CpdError::config(format!(
                        "multivariate normal with {d} means needs {} covariance entries; got {}",
                        d * d,
                        cov.len()
                    )));
                }
                for v in mean.iter().chain(cov) {
                    finite("multivariate normal parameter", *v)?;
                }
                mv_factor(cov, d).map(|_| ())
            }
        }
    }

    /// Per-dimension mean.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            Self::Normal { mean, .. } => vec![*mean],
            Self::Uniform { low, high } => vec![0.5 * (low + high)],
            Self::Poisson { lambda } => vec![*lambda],
            Self::Gamma { shape, scale } => vec![shape * scale],
            Self::LogNormal { mu, sigma } => vec![(mu + 0.5 * sigma * sigma).exp()],
            Self::Mixture { weights, components } => {
                let total: f64 = weights.iter().sum();
                vec![weights.iter().zip(components).map(|(w, (m, _))| w * m).sum::<f64>() / total]
            }
            Self::MvNormal { mean, .. } => mean.clone(),
        }
    }

    /// Per-dimension standard deviation.
    pub fn sd(&self) -> Vec<f64> {
        match self {
            Self::Normal { sd, .. } => vec![*sd],
            Self::Uniform { low, high } => vec![(high - low) / 12f64.sqrt()],
            Self::Poisson { lambda } => vec![lambda.sqrt()],
            Self::Gamma { shape, scale } => vec![shape.sqrt() * scale],
            Self::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                vec![((s2.exp() - 1.0) * (2.0 * mu + s2).exp()).sqrt()]
            }
            Self::Mixture { weights, components } => {
                let total: f64 = weights.iter().sum();
                let mean = self.mean()[0];
                let second: f64 = weights
                    .iter()
                    .zip(components)
                    .map(|(w, (m, s))| w * (s * s + m * m))
                    .sum::<f64>()
                    / total;
                vec![(second - mean * mean).max(0.0).sqrt()]
            }
            Self::MvNormal { mean, cov } => {
                let d = mean.len();
                (0..d).map(|i| cov[i * d + i].sqrt()).collect()
            }
        }
    }

    pub(crate) fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let err = |e: &dyn std::fmt::Display| CpdError::config(e.to_string());
        Ok(match self {
            Self::Normal { mean, sd } => Sampler::Normal(Normal::new(*mean, *sd).map_err(|e| err(&e))?),
            Self::Uniform { low, high } => Sampler::Uniform(Uniform::new(*low, *high).map_err(|e| err(&e))?),
            Self::Poisson { lambda } => Sampler::Poisson(Poisson::new(*lambda).map_err(|e| err(&e))?),
            Self::Gamma { shape, scale } => Sampler::Gamma(Gamma::new(*shape, *scale).map_err(|e| err(&e))?),
            Self::LogNormal { mu, sigma } => Sampler::LogNormal(LogNormal::new(*mu, *sigma).map_err(|e| err(&e))?),
            Self::Mixture { weights, components } => Sampler::Mixture(
                WeightedIndex::new(weights).map_err(|e| err(&e))?,
                components
                    .iter()
                    .map(|(m, s)| Normal::new(*m, *s).map_err(|e| err(&e)))
                    .collect::<Result<_>>()?,
            ),
            Self::MvNormal { mean, cov } => {
                let d = mean.len();
                Sampler::MvNormal(DVector::from_column_slice(mean), mv_factor(cov, d)?)
            }
        })
    }
}

fn mv_factor(cov: &[f64], d: usize) -> Result<DMatrix<f64>> {
    let m = DMatrix::from_row_slice(d, d, cov);
    for i in 0..d {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * m.amax().max(1.0) {
                return Err(CpdError::config("covariance must be symmetric"));
            }
        }
    }
    m.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| CpdError::config("covariance must be positive definite"))
}

pub(crate) enum Sampler {
    Normal(Normal<f64>),
    Uniform(Uniform<f64>),
    Poisson(Poisson<f64>),
    Gamma(Gamma<f64>),
    LogNormal(LogNormal<f64>),
    Mixture(WeightedIndex<f64>, Vec<Normal<f64>>),
    MvNormal(DVector<f64>, DMatrix<f64>),
}

impl Sampler {
    pub(crate) fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            Self::Normal(d) => out.push(d.sample(rng)),
            Self::Uniform(d) => out.push(d.sample(rng)),
            Self::Poisson(d) => out.push(d.sample(rng)),
            Self::Gamma(d) => out.push(d.sample(rng)),
            Self::LogNormal(d) => out.push(d.sample(rng)),
            Self::Mixture(pick, comps) => {
                let c = &comps[pick.sample(rng)];
                out.push(c.sample(rng));
            }
            Self::MvNormal(mean, chol) => {
                let d = mean.len();
                let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
                let x = chol * z + mean;
                out.extend(x.iter());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_piecewise, Segment};

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn segment_moments_match_specification() {
        let specs = [
            DistSpec::Normal { mean: -3.0, sd: 2.0 },
            DistSpec::Uniform { low: 1.0, high: 7.0 },
            DistSpec::Poisson { lambda: 10.0 },
            DistSpec::Gamma { shape: 2.0, scale: 2.0 },
            DistSpec::LogNormal { mu: 0.5, sigma: 0.4 },
            DistSpec::Mixture {
                weights: vec![1.0, 1.0, 1.0],
                components: vec![(5.0, 1.0), (1.0, 1.3), (9.0, 1.3)],
            },
        ];
        let len = 20_000;
        for (i, spec) in specs.iter().enumerate() {
            let s = gen_piecewise(&[Segment::new(spec.clone(), len)], 100 + i as u64).unwrap();
            let (m, sd) = moments(&s.observations);
            let (em, esd) = (spec.mean()[0], spec.sd()[0]);
            let bound = 5.0 * esd / (len as f64).sqrt();
            assert!((m - em).abs() < bound, "{spec:?}: mean {m} vs {em}");
            assert!((sd - esd).abs() < 0.05 * esd, "{spec:?}: sd {sd} vs {esd}");
        }
    }

    #[test]
    fn multivariate_covariance_is_honored() {
        let spec = DistSpec::MvNormal {
            mean: vec![1.0, 0.0],
            cov: vec![1.0, 0.3, 0.3, 1.0],
        };
        let s = gen_piecewise(&[Segment::new(spec, 20_000)], 9).unwrap();
        let n = s.len() as f64;
        let (mut mx, mut my) = (0.0, 0.0);
        for r in s.rows() {
            mx += r[0];
            my += r[1];
        }
        mx /= n;
        my /= n;
        let mut cxy = 0.0;
        for r in s.rows() {
            cxy += (r[0] - mx) * (r[1] - my);
        }
        cxy /= n - 1.0;
        assert!((mx - 1.0).abs() < 5.0 / n.sqrt());
        assert!(my.abs() < 5.0 / n.sqrt());
        assert!((cxy - 0.3).abs() < 5.0 * (1.09_f64 / n).sqrt());
    }

    #[test]
    fn rejects_non_positive_definite_covariance() {
        let spec = DistSpec::MvNormal {
            mean: vec![0.0, 0.0],
            cov: vec![1.0, 2.0, 2.0, 1.0],
        };
        assert!(spec.validate().unwrap_err().is_config());
        let spec = DistSpec::MvNormal {
            mean: vec![0.0, 0.0],
            cov: vec![1.0, 0.0, 0.0],
        };
        assert!(spec.validate().is_err());
    }
}
