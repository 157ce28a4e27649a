//! Reference model for the current regime, used to vet new MAP runs.
//!
//! The tracker scores each observation under a contamination mixture: with
//! probability `1 - e` it follows the regime model, otherwise it is a fresh
//! draw from the prior. Points the prior explains better are treated as
//! contamination and do not update the regime model, so outliers cannot
//! inflate its spread. The rate `e` is the posterior mean under a
//! `Beta(1, lambda - 1)` prior, i.e. it starts at the hazard `1 / lambda` and
//! follows the observed share of contaminated points.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hazard::HazardSpec;
use crate::logmath::log_add_exp;
use crate::models::ConjugateModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct RegimeTracker<M> {
    model: M,
    /// The most recent `window` observations, row-major.
    recent: VecDeque<f64>,
    window: usize,
    seen: u64,
    contaminated: u64,
}

/// Mixture log-density of `x` and whether the regime component wins.
pub(crate) struct RegimeScore {
    pub log_density: f64,
    pub inlier: bool,
}

impl<M: ConjugateModel> RegimeTracker<M> {
    pub(crate) fn new(prior: &M, window: usize) -> Self {
        let window = window.max(1);
        Self {
            model: prior.clone(),
            recent: VecDeque::with_capacity(window * prior.dim()),
            window,
            seen: 0,
            contaminated: 0,
        }
    }

    pub(crate) fn heap_bytes(&self) -> usize {
        let d = self.model.dim();
        self.recent.capacity() * 8 + 8 * (d * d + d)
    }

    fn log_contamination(&self, hazard: &HazardSpec) -> (f64, f64) {
        let e = (self.contaminated as f64 + 1.0) / (self.seen as f64 + hazard.lambda());
        ((-e).ln_1p(), e.ln())
    }

    pub(crate) fn score(&self, x: &[f64], prior_lp: f64, hazard: &HazardSpec) -> Result<RegimeScore> {
        let (log_keep, log_contam) = self.log_contamination(hazard);
        let stay = log_keep + self.model.predictive_logpdf(x)?;
        let fresh = log_contam + prior_lp;
        Ok(RegimeScore {
            log_density: log_add_exp(stay, fresh),
            inlier: stay >= fresh,
        })
    }

    pub(crate) fn observe(&mut self, x: &[f64], inlier: bool) {
        let d = x.len();
        if self.recent.len() == self.window * d {
            self.recent.drain(..d);
        }
        self.recent.extend(x);
        self.absorb(x, inlier);
    }

    fn absorb(&mut self, x: &[f64], inlier: bool) {
        self.seen += 1;
        if inlier {
            self.model.update(x);
        } else {
            self.contaminated += 1;
        }
    }

    /// Refits the regime from the prior over the last `span` buffered rows
    /// (fewer if the window is shorter), applying the same contamination rule.
    pub(crate) fn refit(&mut self, prior: &M, span: usize, hazard: &HazardSpec) -> Result<()> {
        let d = prior.dim();
        let rows = span.min(self.recent.len() / d);
        let from = self.recent.len() - rows * d;
        let tail: Vec<f64> = self.recent.range(from..).copied().collect();
        self.model = prior.clone();
        self.seen = 0;
        self.contaminated = 0;
        for x in tail.chunks_exact(d) {
            let prior_lp = prior.predictive_logpdf(x)?;
            let inlier = self.score(x, prior_lp, hazard)?.inlier;
            self.absorb(x, inlier);
        }
        Ok(())
    }
}
