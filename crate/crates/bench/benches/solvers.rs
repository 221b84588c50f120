use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ratchet_bench::fixture;
use ratchet_core::{
    diffusive_mean, green_function, simulate_particles, solve_stationary, squeeze_solution,
    step_random_flashing, SlOperator, TransientState,
};

fn green(c: &mut Criterion) {
    let mut g = c.benchmark_group("green_function");
    for n in [1001, 4001, 16001] {
        let params = fixture(n);
        let op = SlOperator::new(params.nu.samples().clone(), 1.0).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &op, |b, op| {
            b.iter(|| green_function(op, black_box(0.35)).unwrap())
        });
    }
    g.finish();
}

fn diffusive(c: &mut Criterion) {
    let params = fixture(2001);
    let nu = params.nu.samples().restrict(0, 1000).unwrap();
    c.bench_function("diffusive_mean/1001", |b| {
        b.iter(|| diffusive_mean(black_box(&nu), 1.0).unwrap())
    });
}

fn stationary(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_stationary");
    for n in [1001, 2001, 8001] {
        let params = fixture(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &params, |b, p| {
            b.iter(|| solve_stationary(p).unwrap())
        });
    }
    g.finish();
    let params = fixture(2001);
    c.bench_function("squeeze_solution/2001", |b| {
        b.iter(|| squeeze_solution(black_box(&params)).unwrap())
    });
}

fn transient(c: &mut Criterion) {
    let params = fixture(2001);
    let state = TransientState::uniform(params.grid()).unwrap();
    c.bench_function("step_random_flashing/2001", |b| {
        b.iter(|| step_random_flashing(black_box(&state), 1e-3, &params).unwrap())
    });
}

fn particles(c: &mut Criterion) {
    let params = fixture(2001);
    let mut g = c.benchmark_group("simulate_particles");
    g.sample_size(10);
    g.bench_function("1000x1000_steps", |b| {
        b.iter(|| simulate_particles(&params, 1000, 1.0, 1e-3, black_box(3)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, green, diffusive, stationary, transient, particles);
criterion_main!(benches);
