use serde::{Deserialize, Serialize};

use super::buffer::{RunLengthBuffer, RunLengthHypothesis};
use super::regime::RegimeTracker;
use crate::error::{CpdError, Result};
use crate::hazard::HazardSpec;
use crate::logmath::log_sum_exp_iter;
use crate::models::{check_observation, AutotuneConfig, ConjugateModel, MvNormalGammaParams, NormalGammaParams};

/// Where the prior for fresh runs comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PriorSpec<M> {
    /// Hand-set hyperparameters, used from the first observation.
    Fixed(M),
    /// `beta0` and `mu0` estimated from the first `warmup_size` observations,
    /// which are consumed for tuning and never scored.
    Autotune(AutotuneConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig<M> {
    pub hazard: HazardSpec,
    /// Maximum number of run-length hypotheses kept (`L`).
    pub budget: usize,
    pub prior: PriorSpec<M>,
    /// A new MAP run must have survived this many further observations before
    /// it is reported. Zero reports as soon as the MAP start moves forward.
    pub confirmation: u64,
    /// Also require the new run to explain its observations better than the
    /// outlier-resistant regime model does, by more than the hazard prior
    /// odds. Without it an isolated spike reads as two changes.
    #[serde(default = "enabled")]
    pub evidence_check: bool,
}

fn enabled() -> bool {
    true
}

impl<M> DetectorConfig<M> {
    pub const DEFAULT_BUDGET: usize = 50;
    pub const DEFAULT_LAMBDA: f64 = 250.0;
    pub const DEFAULT_CONFIRMATION: u64 = 50;

    /// `lambda = 250`, `L = 50`, auto-tune over 20 warmup points, reports
    /// confirmed after 50 observations with the evidence check on.
    pub fn autotuned() -> Self {
        Self {
            hazard: HazardSpec::Constant {
                lambda: Self::DEFAULT_LAMBDA,
            },
            budget: Self::DEFAULT_BUDGET,
            prior: PriorSpec::Autotune(AutotuneConfig::default()),
            confirmation: Self::DEFAULT_CONFIRMATION,
            evidence_check: true,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.hazard = HazardSpec::Constant { lambda };
        self
    }

    pub fn with_prior(mut self, prior: PriorSpec<M>) -> Self {
        self.prior = prior;
        self
    }

    pub fn with_confirmation(mut self, confirmation: u64) -> Self {
        self.confirmation = confirmation;
        self
    }

    pub fn with_evidence_check(mut self, enabled: bool) -> Self {
        self.evidence_check = enabled;
        self
    }

    pub fn with_warmup(mut self, warmup_size: usize) -> Self {
        if let PriorSpec::Autotune(cfg) = &mut self.prior {
            cfg.warmup_size = warmup_size;
        }
        self
    }
}

impl DetectorConfig<NormalGammaParams> {
    /// Hand-set prior (`alpha = 0.1, beta = 0.01, kappa = 1, mu = 0`), no warmup.
    pub fn fixed_default() -> Self {
        Self::autotuned().with_prior(PriorSpec::Fixed(NormalGammaParams::fixed_default()))
    }
}

impl<M> Default for DetectorConfig<M> {
    fn default() -> Self {
        Self::autotuned()
    }
}

/// A declared changepoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangepointEvent {
    /// Stream position of the observation that triggered the declaration.
    pub detected_at: u64,
    /// Estimated first index of the new regime.
    pub location: u64,
    /// Normalized posterior mass of the MAP run at declaration.
    pub map_posterior: f64,
    pub map_run_length: u64,
}

/// Per-observation read-out of a scored step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub t: u64,
    /// `ln p(x_t | x_{1:t-1})` under the run-length mixture before the update.
    pub marginal_predictive: f64,
    pub map_run_length: u64,
    pub map_posterior: f64,
    pub hypotheses: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOutcome {
    pub event: Option<ChangepointEvent>,
    /// `None` while the observation was consumed by warmup.
    pub diagnostics: Option<StepDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Warmup {
    remaining: usize,
    samples: Vec<f64>,
}

/// Online changepoint detector with a fixed hypothesis budget.
///
/// Each hypothesis stores `log_mass` relative to `log_offset`; the log joint
/// `ln P(r_t, x_{1:t})` is their sum. The offset absorbs the running maximum
/// so stored masses stay near zero on unbounded streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector<M> {
    config: DetectorConfig<M>,
    dim: usize,
    prior: Option<M>,
    buffer: RunLengthBuffer<M>,
    position: u64,
    log_offset: f64,
    last_reported: Option<u64>,
    /// Posterior model of the observations since the last declared location.
    regime: Option<RegimeTracker<M>>,
    warmup: Warmup,
    #[serde(skip)]
    scratch: Scratch,
}

/// Reusable per-step buffer; carries no state, so it never affects equality.
#[derive(Debug, Clone, Default)]
struct Scratch(Vec<f64>);

impl PartialEq for Scratch {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

pub type UnivariateDetector = Detector<NormalGammaParams>;
pub type MvDetector = Detector<MvNormalGammaParams>;

impl<M: ConjugateModel> Detector<M> {
    pub fn new(config: DetectorConfig<M>, dim: usize) -> Result<Self> {
        config.hazard.validate()?;
        if config.budget == 0 {
            return Err(CpdError::config("hypothesis budget must be at least 1"));
        }
        if dim == 0 {
            return Err(CpdError::config("observation dimension must be at least 1"));
        }
        let (prior, warmup) = match &config.prior {
            PriorSpec::Fixed(m) => {
                m.validate()?;
                if m.dim() != dim {
                    return Err(CpdError::config(format!(
                        "prior has dimension {}, detector configured for {dim}",
                        m.dim()
                    )));
                }
                (
                    Some(m.clone()),
                    Warmup {
                        remaining: 0,
                        samples: Vec::new(),
                    },
                )
            }
            PriorSpec::Autotune(cfg) => {
                cfg.validate()?;
                (
                    None,
                    Warmup {
                        remaining: cfg.warmup_size,
                        samples: Vec::with_capacity(cfg.warmup_size * dim),
                    },
                )
            }
        };
        let budget = config.budget;
        Ok(Self {
            config,
            dim,
            prior,
            buffer: RunLengthBuffer::new(budget),
            position: 0,
            log_offset: 0.0,
            last_reported: None,
            regime: None,
            warmup,
            scratch: Scratch(Vec::with_capacity(budget + 1)),
        })
    }

    pub fn config(&self) -> &DetectorConfig<M> {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of observations consumed so far, warmup included.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Prior used for fresh runs; `None` until warmup completes.
    pub fn prior(&self) -> Option<&M> {
        self.prior.as_ref()
    }

    pub fn buffer(&self) -> &RunLengthBuffer<M> {
        &self.buffer
    }

    pub fn in_warmup(&self) -> bool {
        self.prior.is_none()
    }

    /// Offset to add to stored log masses to recover `ln P(r_t, x_{1:t})`.
    pub fn log_offset(&self) -> f64 {
        self.log_offset
    }

    /// Normalized posterior as `(start_index, probability)` pairs in start order.
    pub fn posterior(&self) -> Vec<(u64, f64)> {
        self.buffer
            .hypotheses()
            .iter()
            .map(|h| h.start_index)
            .zip(self.buffer.normalized())
            .collect()
    }

    /// Run length and normalized mass of the MAP hypothesis. Ties go to the
    /// longer run.
    pub fn map_run_length(&self) -> Option<(u64, f64)> {
        let idx = self.buffer.map_index()?;
        let h = &self.buffer.hypotheses()[idx];
        let total = self.buffer.log_total();
        Some((h.run_length(self.current_t()), (h.log_mass - total).exp()))
    }

    /// Mixture predictive `ln sum_r p(x | r) P(r | x_{1:t})`, without changing state.
    pub fn marginal_predictive_logpdf(&self, x: &[f64]) -> Result<f64> {
        check_observation(x, self.dim)?;
        if self.buffer.is_empty() {
            return Err(CpdError::input("no observation has been scored yet"));
        }
        let mut preds = Vec::with_capacity(self.buffer.len());
        for h in self.buffer.hypotheses() {
            preds.push(h.model.predictive_logpdf(x)?);
        }
        Ok(mixture_logpdf(self.buffer.hypotheses(), &preds))
    }

    /// Approximate heap bytes held by this detector. Independent of stream length.
    pub fn heap_bytes(&self) -> usize {
        let per_model = self.dim * self.dim + self.dim;
        self.buffer.allocated() * (std::mem::size_of::<RunLengthHypothesis<M>>() + 8 * per_model)
            + self.warmup.samples.capacity() * 8
            + self.scratch.0.capacity() * 8
            + self.regime.as_ref().map_or(0, RegimeTracker::heap_bytes)
    }

    /// Consumes one observation.
    ///
    /// On error the detector is unchanged.
    pub fn step(&mut self, x: &[f64]) -> Result<StepOutcome> {
        check_observation(x, self.dim)?;

        let Some(prior) = self.prior.as_ref() else {
            return self.consume_warmup(x);
        };

        let t = self.position;
        let prior_lp = prior.predictive_logpdf(x)?;
        self.scratch.0.clear();
        for h in self.buffer.hypotheses() {
            self.scratch.0.push(h.model.predictive_logpdf(x)?);
        }

        let mut fresh_model = prior.clone();
        fresh_model.update(x);

        let regime = match &self.regime {
            Some(r) => Some(r.score(x, prior_lp, &self.config.hazard)?),
            None => None,
        };

        let marginal_predictive;
        let fresh_mass;
        if self.buffer.is_empty() {
            // First scored observation: a run starts here with certainty.
            marginal_predictive = prior_lp;
            fresh_mass = 0.0;
            self.log_offset = prior_lp;
            self.last_reported = Some(t);
            self.regime = Some(RegimeTracker::new(prior, self.config.confirmation as usize + 1));
        } else {
            let regime_lp = regime.as_ref().map_or(prior_lp, |r| r.log_density);
            let hyps = self.buffer.hypotheses();
            let log_total = log_sum_exp_iter(hyps.iter().map(|h| h.log_mass));
            marginal_predictive = mixture_logpdf(hyps, &self.scratch.0);
            fresh_mass = log_total + self.config.hazard.log_hazard() + prior_lp;
            let log_survival = self.config.hazard.log_survival();
            for (h, lp) in self.buffer.hypotheses_mut().iter_mut().zip(&self.scratch.0) {
                h.log_mass += log_survival + lp;
                h.log_evidence_ratio += lp - regime_lp;
                h.model.update(x);
            }
        }
        self.buffer.push(RunLengthHypothesis {
            start_index: t,
            log_mass: fresh_mass,
            model: fresh_model,
            log_evidence_ratio: 0.0,
        });
        self.buffer.retain_finite();
        if self.buffer.len() > self.buffer.capacity() {
            self.buffer.evict();
        }
        self.rescale();
        self.position += 1;

        let idx = self.buffer.map_index().expect("buffer holds the fresh run");
        let map = &self.buffer.hypotheses()[idx];
        let map_posterior = (map.log_mass - self.buffer.log_total()).exp();
        let map_run_length = map.run_length(t);
        let map_start = map.start_index;
        let map_ratio = map.log_evidence_ratio;

        if let Some(r) = self.regime.as_mut() {
            r.observe(x, regime.as_ref().is_none_or(|s| s.inlier));
        }

        let mut event = None;
        if self.last_reported.is_some_and(|last| map_start > last)
            && map_run_length >= self.config.confirmation
            && (!self.config.evidence_check || self.config.hazard.log_prior_odds() + map_ratio > 0.0)
        {
            self.last_reported = Some(map_start);
            if let (Some(r), Some(prior)) = (self.regime.as_mut(), self.prior.as_ref()) {
                r.refit(prior, map_run_length as usize + 1, &self.config.hazard)?;
            }
            for h in self.buffer.hypotheses_mut() {
                if h.start_index > map_start {
                    h.log_evidence_ratio = 0.0;
                }
            }
            event = Some(ChangepointEvent {
                detected_at: t,
                location: map_start,
                map_posterior,
                map_run_length,
            });
        }

        Ok(StepOutcome {
            event,
            diagnostics: Some(StepDiagnostics {
                t,
                marginal_predictive,
                map_run_length,
                map_posterior,
                hypotheses: self.buffer.len(),
            }),
        })
    }

    /// Feeds a row-major block of observations, collecting declared events.
    pub fn run(&mut self, rows: &[f64]) -> Result<Vec<ChangepointEvent>> {
        if !rows.len().is_multiple_of(self.dim) {
            return Err(CpdError::input("observation block does not split into rows"));
        }
        let mut events = Vec::new();
        for row in rows.chunks_exact(self.dim) {
            if let Some(e) = self.step(row)?.event {
                events.push(e);
            }
        }
        Ok(events)
    }

    fn consume_warmup(&mut self, x: &[f64]) -> Result<StepOutcome> {
        let PriorSpec::Autotune(cfg) = &self.config.prior else {
            unreachable!("fixed priors are set at construction");
        };
        if self.warmup.remaining == 1 {
            let mut samples = std::mem::take(&mut self.warmup.samples);
            samples.extend_from_slice(x);
            match M::autotune(&samples, self.dim, cfg) {
                Ok(prior) => self.prior = Some(prior),
                Err(e) => {
                    samples.truncate(samples.len() - self.dim);
                    self.warmup.samples = samples;
                    return Err(e);
                }
            }
            self.warmup.remaining = 0;
        } else {
            self.warmup.samples.extend_from_slice(x);
            self.warmup.remaining -= 1;
        }
        self.position += 1;
        Ok(StepOutcome::default())
    }

    fn rescale(&mut self) {
        let shift = self
            .buffer
            .hypotheses()
            .iter()
            .map(|h| h.log_mass)
            .fold(f64::NEG_INFINITY, f64::max);
        if shift.is_finite() && shift != 0.0 {
            for h in self.buffer.hypotheses_mut() {
                h.log_mass -= shift;
            }
            self.log_offset += shift;
        }
    }

    fn current_t(&self) -> u64 {
        self.position.saturating_sub(1)
    }

    pub(crate) fn restore_scratch(&mut self) {
        self.scratch = Scratch(Vec::with_capacity(self.config.budget + 1));
    }
}

fn mixture_logpdf<M>(hyps: &[RunLengthHypothesis<M>], preds: &[f64]) -> f64 {
    let log_total = log_sum_exp_iter(hyps.iter().map(|h| h.log_mass));
    log_sum_exp_iter(hyps.iter().zip(preds).map(|(h, lp)| h.log_mass + lp)) - log_total
}
