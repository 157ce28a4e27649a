use serde::{Deserialize, Serialize};

use crate::logmath::{log_sum_exp_iter, normalize_log_into};

/// One candidate run: the stream position where it began, its (shifted) log
/// joint mass, and the posterior model fitted to the observations since then.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLengthHypothesis<M> {
    pub start_index: u64,
    pub log_mass: f64,
    pub model: M,
    /// Log Bayes factor of this run's model against the current regime model
    /// over the observations after `start_index` (or after the last declared
    /// changepoint, if later). The first observation is left out so a single
    /// wild point cannot carry the comparison.
    #[serde(default)]
    pub log_evidence_ratio: f64,
}

impl<M> RunLengthHypothesis<M> {
    /// Run length at stream position `t`.
    pub fn run_length(&self, t: u64) -> u64 {
        t - self.start_index
    }
}

/// Capacity-bounded collection of hypotheses ordered by `start_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLengthBuffer<M> {
    hypotheses: Vec<RunLengthHypothesis<M>>,
    capacity: usize,
}

impl<M> RunLengthBuffer<M> {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "run-length buffer capacity must be positive");
        Self {
            hypotheses: Vec::with_capacity(capacity + 1),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn hypotheses(&self) -> &[RunLengthHypothesis<M>] {
        &self.hypotheses
    }

    pub(crate) fn hypotheses_mut(&mut self) -> &mut [RunLengthHypothesis<M>] {
        &mut self.hypotheses
    }

    pub(crate) fn allocated(&self) -> usize {
        self.hypotheses.capacity()
    }

    /// Appends a hypothesis that starts after every hypothesis already held.
    ///
    /// # Panics
    /// If `start_index` does not exceed the last held start index.
    pub fn push(&mut self, h: RunLengthHypothesis<M>) {
        if let Some(last) = self.hypotheses.last() {
            assert!(
                h.start_index > last.start_index,
                "start indices must be strictly increasing ({} after {})",
                h.start_index,
                last.start_index
            );
        }
        self.hypotheses.push(h);
    }

    /// Removes the hypothesis with the smallest log mass. Among equal masses
    /// the oldest run (smallest start index) goes. The removed mass is dropped;
    /// the remaining masses are untouched.
    ///
    /// # Panics
    /// Unless the buffer holds exactly `capacity + 1` hypotheses.
    pub fn evict(&mut self) -> RunLengthHypothesis<M> {
        assert_eq!(
            self.hypotheses.len(),
            self.capacity + 1,
            "evict called on a buffer that is not one over budget"
        );
        let mut victim = 0;
        for (i, h) in self.hypotheses.iter().enumerate().skip(1) {
            if h.log_mass < self.hypotheses[victim].log_mass {
                victim = i;
            }
        }
        self.hypotheses.remove(victim)
    }

    pub(crate) fn retain_finite(&mut self) {
        self.hypotheses.retain(|h| h.log_mass > f64::NEG_INFINITY);
    }

    pub fn log_total(&self) -> f64 {
        log_sum_exp_iter(self.hypotheses.iter().map(|h| h.log_mass))
    }

    /// Softmax of the log masses, in buffer order.
    pub fn normalized(&self) -> Vec<f64> {
        let logs: Vec<f64> = self.hypotheses.iter().map(|h| h.log_mass).collect();
        let mut out = Vec::with_capacity(logs.len());
        normalize_log_into(&logs, &mut out);
        out
    }

    /// Index of the highest-mass hypothesis; ties go to the older run.
    pub fn map_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, h) in self.hypotheses.iter().enumerate() {
            match best {
                Some(b) if h.log_mass <= self.hypotheses[b].log_mass => {}
                _ => best = Some(i),
            }
        }
        best
    }
}
