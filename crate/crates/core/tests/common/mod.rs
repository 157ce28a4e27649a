//! Independent references for the engine: an unbounded O(n^2) run-length
//! recursion whose run models are recomputed from scratch each step.

#![allow(dead_code)]

use statrs::distribution::{Continuous, StudentsT};
use streamcpd::NormalGammaParams;

/// Posterior after `xs`, computed from sufficient statistics in one pass.
pub fn batch_posterior(prior: &NormalGammaParams, xs: &[f64]) -> NormalGammaParams {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return *prior;
    }
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let k0 = prior.kappa;
    NormalGammaParams {
        alpha: prior.alpha + 0.5 * n,
        beta: prior.beta + 0.5 * ss + k0 * n * (mean - prior.mu).powi(2) / (2.0 * (k0 + n)),
        kappa: k0 + n,
        mu: (k0 * prior.mu + n * mean) / (k0 + n),
    }
}

pub fn student_t_ln_pdf(p: &NormalGammaParams, x: f64) -> f64 {
    let scale = (p.beta * (p.kappa + 1.0) / (p.alpha * p.kappa)).sqrt();
    StudentsT::new(p.mu, scale, 2.0 * p.alpha).unwrap().ln_pdf(x)
}

fn lse(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Normalized posterior over run starts after every observation, as
/// `(start offset, probability)` pairs sorted by start.
pub fn reference_posteriors(prior: &NormalGammaParams, hazard: f64, xs: &[f64]) -> Vec<Vec<(usize, f64)>> {
    let (lh, ls) = (hazard.ln(), (1.0 - hazard).ln());
    // log joint per start offset
    let mut joint: Vec<(usize, f64)> = Vec::new();
    let mut out = Vec::with_capacity(xs.len());
    for (t, &x) in xs.iter().enumerate() {
        if joint.is_empty() {
            joint.push((0, 0.0));
        } else {
            let mut fresh_terms = Vec::with_capacity(joint.len());
            for (start, m) in joint.iter_mut() {
                let run = batch_posterior(prior, &xs[*start..t]);
                let pred = student_t_ln_pdf(&run, x);
                fresh_terms.push(*m + lh + student_t_ln_pdf(prior, x));
                *m += ls + pred;
            }
            joint.push((t, lse(&fresh_terms)));
            joint.retain(|(_, m)| m.is_finite());
        }
        let total = lse(&joint.iter().map(|(_, m)| *m).collect::<Vec<_>>());
        out.push(joint.iter().map(|&(s, m)| (s, (m - total).exp())).collect());
    }
    out
}
