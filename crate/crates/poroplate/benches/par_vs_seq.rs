//! Benchmarks the data-parallel cell solver against the sequential fallback
//! on one representative microstructure (all four problem families).
//!
//! Run with `cargo bench` (parallel feature on by default) or
//! `cargo bench --no-default-features` to time the sequential build alone.

use criterion::{criterion_group, criterion_main, Criterion};
use poroplate::cellsolve::{solve_all, SolveOptions};
use poroplate::microcell::{build_cell, PhaseSpec, Primitive};
use poroplate::Parallelism;

fn options(parallelism: Parallelism) -> SolveOptions {
    SolveOptions {
        parallelism,
        ..SolveOptions::default()
    }
}

fn bench_cell_solve(c: &mut Criterion) {
    let cell = build_cell(
        12,
        &Primitive::CenteredInclusion { radius: 0.3 },
        &PhaseSpec::isotropic(0, 1.0, 1.0),
    )
    .expect("valid benchmark geometry");

    let mut group = c.benchmark_group("cell_solve_n12");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| solve_all(&cell, &options(Parallelism::Sequential)).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| solve_all(&cell, &options(Parallelism::Parallel)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_cell_solve);
criterion_main!(benches);
