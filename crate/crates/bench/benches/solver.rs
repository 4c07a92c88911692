use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gmwdb_bench::{grid, quarterly};
use gmwdb_core::montecarlo::mc_price_static;
use gmwdb_core::quadrature::{fit_natural_spline, gauss_hermite};
use gmwdb_core::solver::{expectation_step, jump_step, maturity_surface, price};
use gmwdb_core::{DeathBenefit, Mode, SimConfig};

fn kernels(c: &mut Criterion) {
    c.bench_function("gauss_hermite q=64", |b| {
        b.iter(|| gauss_hermite(black_box(64)).unwrap())
    });

    let xs: Vec<f64> = (0..=400).map(|i| i as f64 * 0.75).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (100.0f64).max(*x)).collect();
    c.bench_function("spline fit 401 knots", |b| {
        b.iter(|| fit_natural_spline(black_box(&xs), black_box(&ys)).unwrap())
    });
}

fn steps(c: &mut Criterion) {
    let (spec, market, schedule) = quarterly(0.1, DeathBenefit::Db0, 0.014);
    let g = grid(&spec, &market, 400, 100, 64);
    let n = spec.periods();
    let terminal = maturity_surface(&spec, &g);
    let after = expectation_step(&terminal, &spec, &market, &schedule, &g, n).unwrap();
    let mut group = c.benchmark_group("step");
    group.bench_function("expectation", |b| {
        b.iter(|| expectation_step(black_box(&terminal), &spec, &market, &schedule, &g, n).unwrap())
    });
    group.bench_function("jump dynamic", |b| {
        b.iter(|| jump_step(black_box(&after), &spec, &g, n - 1, Mode::Dynamic).unwrap())
    });
    group.finish();
}

fn pricing(c: &mut Criterion) {
    let mut group = c.benchmark_group("price g=10% quarterly");
    group.sample_size(10);
    let (spec, market, schedule) = quarterly(0.1, DeathBenefit::Db0, 0.014);
    for (w, a) in [(200, 50), (400, 100)] {
        let g = grid(&spec, &market, w, a, 64);
        for mode in [Mode::Static, Mode::Dynamic] {
            group.bench_with_input(
                BenchmarkId::new(mode.to_string(), format!("M={w},J={a}")),
                &g,
                |b, g| b.iter(|| price(&spec, &market, &schedule, g, mode).unwrap().price),
            );
        }
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let (spec, market, schedule) = quarterly(0.1, DeathBenefit::Db0, 0.0101);
    let mut group = c.benchmark_group("mc static");
    group.sample_size(10);
    group.bench_function("1e5 paths", |b| {
        b.iter(|| {
            mc_price_static(&spec, &market, &schedule, SimConfig::new(100_000, 7))
                .unwrap()
                .mean
        })
    });
    group.finish();
}

criterion_group!(benches, kernels, steps, pricing, monte_carlo);
criterion_main!(benches);
