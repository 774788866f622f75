//! Hot-path benchmarks: CDF evaluation, shape validation, monopoly grid
//! search, and full-episode throughput for both bandit cores.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pricelab::{check_mhr, check_regularity, run_episode, GridSpec, LearnerSpec};
use pricelab_bench::{mhr_base, probe_prices, regular_base, small_family};

fn bench_cdf_eval(c: &mut Criterion) {
    let regular = regular_base();
    let mhr = mhr_base();
    let prices = probe_prices();
    let mut group = c.benchmark_group("product_cdf");
    group.bench_function("regular_base_200pts", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for &p in &prices {
                acc += regular.product_cdf(black_box(p));
            }
            acc
        })
    });
    group.bench_function("mhr_base_200pts", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for &p in &prices {
                acc += mhr.product_cdf(black_box(p));
            }
            acc
        })
    });
    group.finish();
}

fn bench_validators(c: &mut Criterion) {
    let family = small_family();
    let buyer = &family.base.buyers()[0];
    let mut group = c.benchmark_group("validator");
    for points in [1_000usize, 10_000] {
        let grid = GridSpec::with_points(points);
        group.bench_with_input(BenchmarkId::new("regular", points), &grid, |b, &g| {
            b.iter(|| check_regularity(black_box(buyer), g).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("mhr", points), &grid, |b, &g| {
            b.iter(|| check_mhr(black_box(buyer), g).unwrap())
        });
    }
    group.finish();
}

fn bench_monopoly_search(c: &mut Criterion) {
    let instance = regular_base();
    c.bench_function("monopoly_grid_1e5", |b| {
        b.iter(|| instance.monopoly_price_with(black_box(100_000)))
    });
}

fn bench_episode_throughput(c: &mut Criterion) {
    let instance = regular_base();
    let horizon = 10_000u64;
    let mut group = c.benchmark_group("episode_10k_rounds");
    group.sample_size(20);
    for (name, spec) in [
        ("ucb_16", LearnerSpec::Ucb { arms: 16 }),
        ("exp3_16", LearnerSpec::Exp3 { arms: 16, eta: None }),
        ("vanilla", LearnerSpec::Vanilla { core: None }),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| {
                let mut learner = spec.build(horizon).unwrap();
                run_episode(black_box(&instance), learner.as_mut(), horizon, 7)
            })
        });
    }
    group.finish();
}

criterion_group!(
    kernels,
    bench_cdf_eval,
    bench_validators,
    bench_monopoly_search,
    bench_episode_throughput
);
criterion_main!(kernels);
