use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use streamcpd::datagen::{mv_drift, normal_switch, DriftKind};
use streamcpd::{CusumConfig, CusumState, DetectorConfig, MvDetector, UnivariateDetector};

const WARM: usize = 5_000;

/// Detector that has already seen `WARM` points, so its buffer is full.
fn warmed(budget: usize, xs: &[f64]) -> UnivariateDetector {
    let mut d = UnivariateDetector::new(DetectorConfig::autotuned().with_budget(budget), 1).unwrap();
    for x in &xs[..WARM] {
        d.step(std::slice::from_ref(x)).unwrap();
    }
    d
}

fn step_latency(c: &mut Criterion) {
    let s = normal_switch(20_000, 10_000, 42).unwrap();
    let mut group = c.benchmark_group("step");
    for budget in [10, 20, 50, 100] {
        let mut d = warmed(budget, &s.observations);
        let mut i = WARM;
        group.bench_with_input(BenchmarkId::new("univariate", budget), &budget, |b, _| {
            b.iter(|| {
                i = if i + 1 < s.len() { i + 1 } else { WARM };
                black_box(d.step(&s.observations[i..=i]).unwrap())
            })
        });
    }

    let mv = mv_drift(DriftKind::Covariance, 5_000, 42).unwrap();
    let mut d = MvDetector::new(DetectorConfig::autotuned(), 2).unwrap();
    for x in mv.rows().take(WARM) {
        d.step(x).unwrap();
    }
    let rows: Vec<&[f64]> = mv.rows().collect();
    let mut i = WARM;
    group.bench_function("bivariate/50", |b| {
        b.iter(|| {
            i = if i + 1 < rows.len() { i + 1 } else { WARM };
            black_box(d.step(rows[i]).unwrap())
        })
    });

    let mut cusum = CusumState::new(CusumConfig::default()).unwrap();
    let mut i = 0;
    group.bench_function("cusum", |b| {
        b.iter(|| {
            i = (i + 1) % s.len();
            black_box(cusum.step(s.observations[i]).unwrap())
        })
    });
    group.finish();
}

fn throughput(c: &mut Criterion) {
    let s = normal_switch(100_000, 10_000, 42).unwrap();
    let mut group = c.benchmark_group("throughput");
    group.sample_size(10);
    group.throughput(Throughput::Elements(s.len() as u64));
    group.bench_function("normal-switch-100k", |b| {
        b.iter_batched(
            || UnivariateDetector::new(DetectorConfig::autotuned(), 1).unwrap(),
            |mut d| black_box(d.run(&s.observations).unwrap()),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, step_latency, throughput);
criterion_main!(benches);
