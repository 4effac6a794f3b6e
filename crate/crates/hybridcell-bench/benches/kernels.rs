//! Microbenchmarks of the numerical kernels the analytical engine leans on.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hybridcell::antenna::half_power_offset;
use hybridcell::numerics::{integrate_semi_infinite, lambert_w0, QuadratureSpec};

fn bench_lambert(c: &mut Criterion) {
    let mut group = c.benchmark_group("lambert_w0");
    for x in [1e-4, 1.0, 50.0, 1e8] {
        group.bench_function(format!("x={x}"), |b| {
            b.iter(|| lambert_w0(black_box(x)).unwrap())
        });
    }
    group.finish();
}

fn bench_quadrature(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    c.bench_function("semi_infinite_interference_kernel", |b| {
        b.iter(|| {
            integrate_semi_infinite(
                |r| {
                    let hit = 1.0 - (1.0 + 3.2 * r.powf(-2.0)).powf(-3.0);
                    hit * (-0.019 * r).exp() * r
                },
                black_box(12.0),
                &spec,
            )
            .unwrap()
        })
    });
}

fn bench_half_power(c: &mut Criterion) {
    c.bench_function("half_power_offset_n64", |b| {
        b.iter(|| half_power_offset(black_box(64)))
    });
}

criterion_group!(benches, bench_lambert, bench_quadrature, bench_half_power);
criterion_main!(benches);
