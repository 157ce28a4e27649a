//! Absolute-error changepoint metric with penalties for missed and extra
//! detections.
//!
//! Actual and predicted changepoints are paired one-to-one, closest pair
//! first. The loss is the summed distance over pairs plus a penalty: `n` per
//! missed changepoint when there are at least as many actual as predicted
//! points, otherwise the indices of the surplus predictions.

use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};

/// How surplus predictions are charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    /// Sum of the indices of predictions left unmatched.
    #[default]
    Unmatched,
    /// Sum of the indices of every prediction.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeReport {
    pub loss: u64,
    pub matched_pairs: Vec<(u64, u64)>,
    pub unmatched_actual: Vec<u64>,
    pub unmatched_predicted: Vec<u64>,
    pub n: u64,
    pub mode: PenaltyMode,
    /// Number of actual changepoints.
    pub j: usize,
    /// Number of predicted changepoints.
    pub k: usize,
}

impl MaeReport {
    pub fn matched_error(&self) -> u64 {
        self.matched_pairs.iter().map(|&(a, p)| a.abs_diff(p)).sum()
    }

    pub fn penalty(&self) -> u64 {
        if self.j >= self.k {
            (self.j - self.k) as u64 * self.n
        } else {
            match self.mode {
                PenaltyMode::Unmatched => self.unmatched_predicted.iter().sum(),
                PenaltyMode::Literal => {
                    self.matched_pairs.iter().map(|&(_, p)| p).sum::<u64>()
                        + self.unmatched_predicted.iter().sum::<u64>()
                }
            }
        }
    }

    pub const CSV_HEADER: &'static str = "algorithm,dataset,loss,j,k,runtime_s";

    pub fn csv_row(&self, algorithm: &str, dataset: &str, runtime_s: f64) -> String {
        format!(
            "{algorithm},{dataset},{},{},{},{runtime_s:.6}",
            self.loss, self.j, self.k
        )
    }
}

/// Greedy one-to-one pairing, globally closest pair first. Ties prefer the
/// smaller actual index, then the smaller predicted index. Inputs must be
/// sorted ascending.
pub fn match_changepoints(actual: &[u64], predicted: &[u64]) -> Vec<(u64, u64)> {
    let mut candidates: Vec<(u64, usize, usize)> = Vec::with_capacity(actual.len() * predicted.len());
    for (i, &a) in actual.iter().enumerate() {
        for (j, &p) in predicted.iter().enumerate() {
            candidates.push((a.abs_diff(p), i, j));
        }
    }
    candidates.sort_unstable();
    let mut used_a = vec![false; actual.len()];
    let mut used_p = vec![false; predicted.len()];
    let mut pairs = Vec::with_capacity(actual.len().min(predicted.len()));
    for (_, i, j) in candidates {
        if !used_a[i] && !used_p[j] {
            used_a[i] = true;
            used_p[j] = true;
            pairs.push((actual[i], predicted[j]));
            if pairs.len() == actual.len().min(predicted.len()) {
                break;
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Scores `predicted` against `actual` on a stream of `n` points.
///
/// Inputs may arrive in any order; they are sorted first. Indices at or past
/// `n` are rejected.
pub fn mae_with_penalty(actual: &[u64], predicted: &[u64], n: u64, mode: PenaltyMode) -> Result<MaeReport> {
    if let Some(bad) = actual.iter().chain(predicted).find(|&&i| i >= n) {
        return Err(CpdError::input(format!(
            "changepoint index {bad} is outside a stream of {n} points"
        )));
    }
    let mut actual = actual.to_vec();
    let mut predicted = predicted.to_vec();
    actual.sort_unstable();
    predicted.sort_unstable();

    let matched_pairs = match_changepoints(&actual, &predicted);
    let unmatched = |all: &[u64], taken: &mut dyn Iterator<Item = u64>| {
        let mut taken: Vec<u64> = taken.collect();
        taken.sort_unstable();
        let mut rest = Vec::new();
        let mut it = taken.into_iter().peekable();
        for &v in all {
            if it.peek() == Some(&v) {
                it.next();
            } else {
                rest.push(v);
            }
        }
        rest
    };
    let unmatched_actual = unmatched(&actual, &mut matched_pairs.iter().map(|p| p.0));
    let unmatched_predicted = unmatched(&predicted, &mut matched_pairs.iter().map(|p| p.1));

    let mut report = MaeReport {
        loss: 0,
        matched_pairs,
        unmatched_actual,
        unmatched_predicted,
        n,
        mode,
        j: actual.len(),
        k: predicted.len(),
    };
    report.loss = report.matched_error() + report.penalty();
    Ok(report)
}
