use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use takeup_core::estimator::{fit, loglik_pooled, loglik_re, FitOptions, RandomEffectsIntegrator};

fn evaluation(c: &mut Criterion) {
    let panel = takeup_bench::panel(1000);
    let data = takeup_bench::dataset(&panel);
    let beta = vec![0.1; data.width()];
    c.bench_function("loglik_pooled", |b| b.iter(|| loglik_pooled(black_box(&data), black_box(&beta)).unwrap()));
    let mut group = c.benchmark_group("loglik_re");
    for nodes in [12, 32, 50] {
        let integ = RandomEffectsIntegrator::new(nodes, false).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &integ, |b, integ| {
            b.iter(|| loglik_re(black_box(&data), black_box(&beta), 1.0, integ).unwrap())
        });
    }
    group.finish();
}

fn estimation(c: &mut Criterion) {
    let panel = takeup_bench::panel(500);
    let data = takeup_bench::dataset(&panel);
    let opts = FitOptions { marginal_effects: false, ..FitOptions::default() };
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("re_500_households", |b| b.iter(|| fit(black_box(&data), "bench", &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, evaluation, estimation);
criterion_main!(benches);
