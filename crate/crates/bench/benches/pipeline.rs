use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use xtlab::sim::{synth_ground_truth_sized, SimRecord};
use xtlab::{build_sampler, estimate_model, fit_ols, resample_counts, solve_xt, Grid, SolverOptions};

const GRIDS: [(usize, usize); 3] = [(16, 12), (32, 24), (64, 48)];

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_xt");
    for (nx, ny) in GRIDS {
        let grid = Grid::new(nx, ny).unwrap();
        let model = estimate_model(&synth_ground_truth_sized(grid, 1, 1_000_000));
        group.bench_with_input(BenchmarkId::from_parameter(grid), &model, |b, m| {
            b.iter(|| solve_xt(black_box(m), SolverOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn resampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("resample_counts");
    group.sample_size(20);
    let sampler = build_sampler(&synth_ground_truth_sized(Grid::new(32, 24).unwrap(), 1, 1_000_000)).unwrap();
    for n in [100_000u64, 630_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| resample_counts(&sampler, n, black_box(7)).unwrap())
        });
    }
    group.finish();
}

fn regression(c: &mut Criterion) {
    let records: Vec<SimRecord> = (0..23_000u64)
        .map(|i| SimRecord {
            m: [192, 768, 1200][(i % 3) as usize],
            n: [100_000, 370_000, 1_300_000, 4_000_000][(i % 4) as usize],
            rep: i,
            seed: i,
            max_error: 0.01 + (i % 97) as f64 * 1e-4,
            converged: true,
            iterations: 1,
        })
        .collect();
    c.bench_function("fit_ols/23000", |b| b.iter(|| fit_ols(black_box(&records)).unwrap()));
}

criterion_group!(benches, solver, resampling, regression);
criterion_main!(benches);
