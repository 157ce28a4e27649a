mod common;

use common::{batch_posterior, reference_posteriors, student_t_ln_pdf};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use streamcpd::{DetectorConfig, NormalGammaParams, PriorSpec, UnivariateDetector};

fn arb_prior() -> impl Strategy<Value = NormalGammaParams> {
    (0.05f64..5.0, 0.01f64..5.0, 0.1f64..5.0, -10.0f64..10.0)
        .prop_map(|(a, b, k, m)| NormalGammaParams::new(a, b, k, m).unwrap())
}

proptest! {
    #[test]
    fn sequential_update_matches_batch_posterior(
        prior in arb_prior(),
        xs in proptest::collection::vec(-30.0f64..30.0, 1..100),
    ) {
        let mut seq = prior;
        for (i, &x) in xs.iter().enumerate() {
            seq.observe(x);
            let batch = batch_posterior(&prior, &xs[..=i]);
            for (a, b) in [(seq.alpha, batch.alpha), (seq.beta, batch.beta), (seq.kappa, batch.kappa), (seq.mu, batch.mu)] {
                prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{:?} vs {:?}", seq, batch);
            }
        }
    }

    #[test]
    fn predictive_matches_students_t(prior in arb_prior(), x in -50.0f64..50.0) {
        let ours = prior.logpdf(x);
        let theirs = student_t_ln_pdf(&prior, x);
        prop_assert!((ours - theirs).abs() <= 1e-10 * theirs.abs().max(1.0), "{} vs {}", ours, theirs);
    }
}

fn piecewise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.random_range(20..200);
        let d = Normal::new(rng.random_range(-20.0..20.0), rng.random_range(0.3..4.0)).unwrap();
        out.extend((0..len).map(|_| d.sample(rng)).take(n - out.len()));
    }
    out
}

fn max_gap(engine: &[(u64, f64)], reference: &[(usize, f64)], offset: u64) -> f64 {
    assert_eq!(engine.len(), reference.len());
    engine
        .iter()
        .zip(reference)
        .map(|(&(s, p), &(r, q))| {
            assert_eq!(s, r as u64 + offset);
            (p - q).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn unbounded_engine_matches_reference_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let xs = piecewise(&mut rng, 300);
        let prior = NormalGammaParams::new(
            rng.random_range(0.1..3.0),
            rng.random_range(0.05..3.0),
            rng.random_range(0.2..3.0),
            0.0,
        )
        .unwrap();
        let lambda = rng.random_range(5.0..500.0);
        let cfg = DetectorConfig::autotuned()
            .with_prior(PriorSpec::Fixed(prior))
            .with_lambda(lambda)
            .with_budget(512);
        let mut d = UnivariateDetector::new(cfg, 1).unwrap();
        let reference = reference_posteriors(&prior, 1.0 / lambda, &xs);
        for (t, x) in xs.iter().enumerate() {
            d.step(&[*x]).unwrap();
            let gap = max_gap(&d.posterior(), &reference[t], 0);
            assert!(gap <= 1e-9, "case {case} t {t}: {gap}");
        }
    }
}

#[test]
fn autotuned_engine_matches_reference_after_warmup() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let xs = piecewise(&mut rng, 400);
    let mut d = UnivariateDetector::new(DetectorConfig::autotuned().with_budget(512), 1).unwrap();
    for x in &xs[..20] {
        d.step(&[*x]).unwrap();
    }
    let prior = *d.prior().unwrap();
    let reference = reference_posteriors(&prior, 1.0 / 250.0, &xs[20..]);
    for (t, x) in xs[20..].iter().enumerate() {
        d.step(&[*x]).unwrap();
        assert!(max_gap(&d.posterior(), &reference[t], 20) <= 1e-9);
    }
}
