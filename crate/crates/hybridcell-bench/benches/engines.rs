//! End-to-end engine benchmarks on the default three-tier scenario.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hybridcell::association::association_probability;
use hybridcell::coverage::{conditional_coverage, sinr_coverage};
use hybridcell::montecarlo::{estimate, SimOptions};
use hybridcell::network::{db_to_linear, Direction, NetworkConfig};

fn bench_association(c: &mut Criterion) {
    let cfg = NetworkConfig::three_tier_default();
    c.bench_function("association_probability_thz_dl", |b| {
        b.iter(|| association_probability(black_box(&cfg), 2, Direction::Dl).unwrap())
    });
}

fn bench_conditional(c: &mut Criterion) {
    let cfg = NetworkConfig::three_tier_default();
    let tau = db_to_linear(10.0);
    let mut group = c.benchmark_group("conditional_coverage");
    group.bench_function("mmwave", |b| {
        b.iter(|| conditional_coverage(&cfg, 1, Direction::Dl, black_box(tau), 30.0).unwrap())
    });
    group.bench_function("thz", |b| {
        b.iter(|| conditional_coverage(&cfg, 2, Direction::Dl, black_box(tau), 12.0).unwrap())
    });
    group.finish();
}

fn bench_total_coverage(c: &mut Criterion) {
    let cfg = NetworkConfig::three_tier_default();
    let tau = db_to_linear(10.0);
    let mut group = c.benchmark_group("sinr_coverage_point");
    group.sample_size(10);
    group.bench_function("dl_10db", |b| {
        b.iter(|| sinr_coverage(&cfg, Direction::Dl, black_box(tau)).unwrap())
    });
    group.finish();
}

fn bench_monte_carlo(c: &mut Criterion) {
    let cfg = NetworkConfig::three_tier_default();
    let opts = SimOptions {
        n_trials: 50,
        seed: 1,
        sinr_thresholds_db: vec![10.0],
        rate_thresholds_bps: vec![1e9],
        ..SimOptions::default()
    };
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("50_trials", |b| b.iter(|| estimate(&cfg, black_box(&opts))));
    group.finish();
}

criterion_group!(
    benches,
    bench_association,
    bench_conditional,
    bench_total_coverage,
    bench_monte_carlo
);
criterion_main!(benches);
