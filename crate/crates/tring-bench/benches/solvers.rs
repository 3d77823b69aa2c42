//! Whole-solve benchmarks at fixed iteration counts, small enough to
//! finish quickly but large enough that the factored solver's advantage
//! at scale is visible.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tring::solve::{fantrc_solve, ntrc_solve};
use tring::SolverConfig;
use tring_bench::{observations, ring_tensor};

fn capped_config(delta: f64) -> SolverConfig {
    let mut cfg = SolverConfig::new(0.05, delta).unwrap();
    // A fixed iteration budget keeps the workload identical per sample.
    cfg.max_iter = 25;
    cfg.tol = 1e-14;
    cfg.track_objective = false;
    cfg
}

fn bench_solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solvers");
    group.sample_size(10);

    let small = ring_tensor(8, 4, 2, 3);
    let small_obs = observations(&small, 0.5, 0.01, 3);
    let small_cfg = capped_config(small.inf_norm());
    group.bench_function("full solver 8^4, 25 iterations", |b| {
        b.iter(|| black_box(ntrc_solve(&small_obs, &small_cfg, None).unwrap()))
    });
    group.bench_function("factored solver 8^4, 25 iterations", |b| {
        b.iter(|| black_box(fantrc_solve(&small_obs, &[4; 4], &small_cfg, None).unwrap()))
    });

    let large = ring_tensor(16, 4, 2, 4);
    let large_obs = observations(&large, 0.3, 0.01, 4);
    let large_cfg = capped_config(large.inf_norm());
    group.bench_function("full solver 16^4, 25 iterations", |b| {
        b.iter(|| black_box(ntrc_solve(&large_obs, &large_cfg, None).unwrap()))
    });
    group.bench_function("factored solver 16^4, 25 iterations", |b| {
        b.iter(|| black_box(fantrc_solve(&large_obs, &[4; 4], &large_cfg, None).unwrap()))
    });

    group.finish();
}

criterion_group!(benches, bench_solvers);
criterion_main!(benches);
