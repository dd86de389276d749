//! Compares the data-parallel pipelines against single-threaded execution.
//!
//! With the default `parallel` feature the same code runs inside rayon pools
//! of one thread and of the default width; built with
//! `--no-default-features` only the sequential path exists.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gridforge::elliptic::{solve_ubar, ChiSpec, SolverConfig};
use gridforge::flux::AnalyticField;
use gridforge::ode::IntegratorConfig;
use gridforge::ortho::{generate_orthogonal, FirstLine, WeightMode};

fn pass1_case(n_zeta: usize, n_eta: usize) {
    let field = AnalyticField::solovev();
    let grid = generate_orthogonal(
        &field,
        -20.0,
        -1.0,
        n_zeta,
        n_eta,
        WeightMode::GradPsi,
        FirstLine::Inner,
        &IntegratorConfig::default(),
    )
    .unwrap();
    assert!(grid.f0 > 0.0);
}

fn solve_case(n_zeta: usize, n_eta: usize) {
    let field = AnalyticField::solovev();
    let grid = generate_orthogonal(
        &field,
        -20.0,
        -1.0,
        n_zeta,
        n_eta,
        WeightMode::GradPsi,
        FirstLine::Inner,
        &IntegratorConfig::default(),
    )
    .unwrap();
    let (u, _) =
        solve_ubar(&grid, &ChiSpec::monitor_default(), &field, &SolverConfig::default()).unwrap();
    assert!(u.values.len() == n_zeta * n_eta);
}

#[cfg(feature = "parallel")]
fn with_threads<F: Fn() + Sync>(threads: usize, f: F) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(f);
}

#[cfg(feature = "parallel")]
fn bench_parallel(c: &mut Criterion) {
    let mut group = c.benchmark_group("pass1_radial_extension");
    group.sample_size(10);
    for &threads in &[1usize, 0] {
        let label = if threads == 1 { "sequential" } else { "parallel" };
        group.bench_with_input(BenchmarkId::new(label, 16), &threads, |b, &t| {
            b.iter(|| with_threads(if t == 0 { num_threads_default() } else { t }, || pass1_case(16, 160)))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("ubar_solve");
    group.sample_size(10);
    for &threads in &[1usize, 0] {
        let label = if threads == 1 { "sequential" } else { "parallel" };
        group.bench_with_input(BenchmarkId::new(label, 32), &threads, |b, &t| {
            b.iter(|| with_threads(if t == 0 { num_threads_default() } else { t }, || solve_case(32, 160)))
        });
    }
    group.finish();
}

#[cfg(feature = "parallel")]
fn num_threads_default() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4)
}

#[cfg(not(feature = "parallel"))]
fn bench_parallel(c: &mut Criterion) {
    let mut group = c.benchmark_group("sequential_fallback");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("pass1", 16), |b| b.iter(|| pass1_case(16, 160)));
    group.bench_function(BenchmarkId::new("ubar_solve", 32), |b| b.iter(|| solve_case(32, 160)));
    group.finish();
}

criterion_group!(benches, bench_parallel);
criterion_main!(benches);
