use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;
use takeup_core::pipeline::build_observations;
use takeup_core::rules::simulate_population;
use takeup_core::spells::{Deflator, SpellIndex};

fn entitlements(c: &mut Criterion) {
    let panel = takeup_bench::panel(2000);
    let mut group = c.benchmark_group("rules");
    group.throughput(Throughput::Elements(panel.snapshots.len() as u64));
    group.bench_function("simulate_population", |b| {
        b.iter(|| simulate_population(black_box(&panel.snapshots), &panel.policies).unwrap())
    });
    group.finish();
}

fn covariates(c: &mut Criterion) {
    let panel = takeup_bench::panel(2000);
    let index = SpellIndex::new(panel.spells.clone()).unwrap();
    let deflator = Deflator::from_policies(&panel.policies);
    let mut group = c.benchmark_group("spells");
    group.throughput(Throughput::Elements(panel.snapshots.len() as u64));
    group.bench_function("build_observations", |b| {
        b.iter(|| build_observations(black_box(&panel.snapshots), &panel.entitlements, &index, &deflator).unwrap())
    });
    group.finish();
}

criterion_group!(benches, entitlements, covariates);
criterion_main!(benches);
