//! End-to-end acceptance gate. Each test checks one numbered claim about
//! the library, from exact algebraic identities through solver accuracy
//! on reference completion instances to reproducibility of the benchmark
//! tables, and prints a single PASS/FAIL line with the measured values
//! (visible under `--nocapture`).
//!
//! The solver-accuracy and protocol checks run real completion problems,
//! so the whole binary takes tens of minutes on one core.

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::Command;
use std::sync::OnceLock;
use tring::experiments::{fit_linear, run_protocol, summarize, ExperimentSpec, Protocol};
use tring::linalg::{numerical_rank, random_orthonormal, spectral_norm, svt, thin_svd};
use tring::ring::{
    circular_rank_bound, random_tr, trnn, tucker_rank_floor, uniform_alpha, unfolding_rank,
};
use tring::sampling::{
    lambda0, observe, sample_uniform, NoiseFamily, NoiseModel, ObservationSet, LAMBDA_MULTIPLIERS,
};
use tring::solve::{
    fantrc_estimate_update, fantrc_solve, ntrc_estimate_update, ntrc_solve, SolveReport,
    SolverConfig, SolverKind,
};
use tring::tensor::{
    canonical_fold, canonical_unfold, default_s, first_k_unfold, invert_multi_index, kron,
    mode_k_product, DenseTensor, UnfoldingSpec,
};

fn verdict(number: usize, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {number:02} {name}: {tag} ({detail})");
    assert!(pass, "criterion {number:02} {name}: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_tensor(dims: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    let data = (0..dims.iter().product::<usize>())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    DenseTensor::new(dims.to_vec(), data).unwrap()
}

fn max_abs_diff(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Ring entry as an explicit sum over all bond-index tuples, sharing no
/// code with the unfolding-based reconstruction it checks.
fn brute_ring_entry(cores: &[DenseTensor], idx: &[usize]) -> f64 {
    let k = cores.len();
    let ranks: Vec<usize> = cores.iter().map(|c| c.dims()[0]).collect();
    let mut bond = vec![1usize; k];
    let mut total = 0.0;
    loop {
        let mut prod = 1.0;
        for (m, core) in cores.iter().enumerate() {
            prod *= core.get(&[bond[m], idx[m], bond[(m + 1) % k]]);
        }
        total += prod;
        let mut m = 0;
        loop {
            if m == k {
                return total;
            }
            bond[m] += 1;
            if bond[m] <= ranks[m] {
                break;
            }
            bond[m] = 1;
            m += 1;
        }
    }
}

#[test]
fn criterion_01_ring_reconstruction_matches_brute_force() {
    let mut rng = rng(101);
    let mut worst = 0.0f64;
    for k in 2..=4 {
        for d in 2..=4 {
            for r in 1..=3 {
                let dims = vec![d; k];
                let tr = random_tr(&mut rng, &dims, &vec![r; k]).unwrap();
                let dense = tr.reconstruct().unwrap();
                for linear in 1..=dense.numel() {
                    let idx = invert_multi_index(linear, &dims).unwrap();
                    let brute = brute_ring_entry(tr.cores(), &idx);
                    worst = worst.max((dense.data()[linear - 1] - brute).abs());
                }
            }
        }
    }
    verdict(
        1,
        "ring reconstruction matches brute force",
        worst <= 1e-12,
        &format!("27 (order, extent, rank) grids, max abs deviation {worst:.2e}, tol 1e-12"),
    );
}

#[test]
fn criterion_02_unfold_fold_round_trips_are_exact() {
    let mut rng = rng(202);
    let mut failures = 0usize;
    for trip in 0..1000 {
        let order = rng.random_range(3..=5);
        let dims: Vec<usize> = (0..order).map(|_| rng.random_range(2..=4)).collect();
        let t = random_tensor(&dims, &mut rng);
        let ok = match trip % 3 {
            0 => {
                let mode = rng.random_range(1..=order);
                let s = rng.random_range(1..=order - 1);
                let spec = UnfoldingSpec::circular(&dims, mode, s).unwrap();
                let back = spec.fold(&spec.unfold(&t).unwrap()).unwrap();
                back.dims() == t.dims() && back.data() == t.data()
            }
            1 => {
                let mode = rng.random_range(1..=order);
                let m = canonical_unfold(&t, mode).unwrap();
                canonical_fold(&m, mode, &dims).unwrap().data() == t.data()
            }
            _ => {
                // The first-k unfolding is a reshape, so reading the
                // matrix column by column must give the stored data back.
                let k = rng.random_range(1..=order);
                let m = first_k_unfold(&t, k).unwrap();
                let flat: Vec<f64> = m.t().iter().copied().collect();
                flat == t.data()
            }
        };
        if !ok {
            failures += 1;
        }
    }
    verdict(
        2,
        "unfold and fold round trips are exact",
        failures == 0,
        &format!("1000 randomized trips, {failures} failures, bitwise equality"),
    );
}

#[test]
fn criterion_03_objective_is_invariant_under_orthonormal_lifts() {
    let mut rng = rng(303);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let order = 3 + case % 2;
        let r = rng.random_range(1..=2);
        let ranks = vec![r; order];
        let core_dims: Vec<usize> = tucker_rank_floor(&ranks)
            .iter()
            .map(|&f| f + rng.random_range(0..=1))
            .collect();
        let small = random_tr(&mut rng, &core_dims, &ranks).unwrap().reconstruct().unwrap();
        let mut big = small.clone();
        for (m, &cd) in core_dims.iter().enumerate() {
            let d = cd + rng.random_range(0..=2);
            let u = random_orthonormal(&mut rng, d, cd).unwrap();
            big = mode_k_product(&big, &u, m + 1).unwrap();
        }
        let s = default_s(order);
        let alpha = uniform_alpha(order);
        let a = trnn(&small, s, &alpha).unwrap();
        let b = trnn(&big, s, &alpha).unwrap();
        worst = worst.max((a - b).abs() / a.max(1e-12));
    }
    verdict(
        3,
        "nuclear objective is invariant under orthonormal lifts",
        worst <= 1e-8,
        &format!("100 lifted instances, max relative deviation {worst:.2e}, tol 1e-8"),
    );
}

#[test]
fn criterion_04_circular_ranks_respect_the_product_bound() {
    let mut rng = rng(404);
    let mut violations = 0usize;
    for case in 0..100 {
        let order = 3 + case % 2;
        let dims: Vec<usize> = (0..order).map(|_| rng.random_range(3..=5)).collect();
        let ranks: Vec<usize> = (0..order).map(|_| rng.random_range(1..=2)).collect();
        let t = random_tr(&mut rng, &dims, &ranks).unwrap().reconstruct().unwrap();
        for mode in 1..=order {
            for s in 1..=order - 1 {
                let rank = unfolding_rank(&t, mode, s).unwrap();
                if rank > circular_rank_bound(&ranks, mode, s) {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        4,
        "circular unfolding ranks respect the product bound",
        violations == 0,
        &format!("100 random rings, every (mode, s) pair, {violations} violations"),
    );
}

#[test]
fn criterion_05_canonical_ranks_saturate_on_a_small_ring() {
    let mut wrong = Vec::new();
    for seed in 0..5u64 {
        let mut rng = rng(505 + seed);
        let t = random_tr(&mut rng, &[3; 4], &[2; 4]).unwrap().reconstruct().unwrap();
        for mode in 1..=4 {
            let rank = numerical_rank(&canonical_unfold(&t, mode).unwrap()).unwrap();
            if rank != 3 {
                wrong.push((seed, mode, rank));
            }
        }
    }
    verdict(
        5,
        "canonical ranks saturate on a 3^4 rank-2 ring",
        wrong.is_empty(),
        &format!("5 seeds x 4 modes, expected rank 3 everywhere, mismatches {wrong:?}"),
    );
}

/// Kronecker lift of per-mode factors over a mode group, fastest-varying
/// mode first, matching the column-major vectorization of that group.
fn kron_chain(factors: &[Array2<f64>], modes: &[usize]) -> Array2<f64> {
    let mut acc = factors[modes[0] - 1].clone();
    for &m in &modes[1..] {
        acc = kron(&factors[m - 1], &acc);
    }
    acc
}

#[test]
fn criterion_06_unfoldings_factor_through_kronecker_lifts() {
    let mut rng = rng(606);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let order = 3 + case % 2;
        let core_dims: Vec<usize> = (0..order).map(|_| rng.random_range(2..=3)).collect();
        let core = random_tensor(&core_dims, &mut rng);
        let mut t = core.clone();
        let mut factors = Vec::new();
        let mut dims = Vec::new();
        for (m, &cd) in core_dims.iter().enumerate() {
            let d = cd + 1;
            let u = Array2::from_shape_fn((d, cd), |_| rng.random_range(-1.0..1.0));
            t = mode_k_product(&t, &u, m + 1).unwrap();
            factors.push(u);
            dims.push(d);
        }
        for mode in 1..=order {
            for s in 1..=order - 1 {
                let big = UnfoldingSpec::circular(&dims, mode, s).unwrap();
                let small = UnfoldingSpec::circular(&core_dims, mode, s).unwrap();
                let lhs = big.unfold(&t).unwrap();
                let rhs = kron_chain(&factors, big.row_modes())
                    .dot(&small.unfold(&core).unwrap())
                    .dot(&kron_chain(&factors, big.col_modes()).t());
                let diff = (&lhs - &rhs).iter().map(|v| v * v).sum::<f64>().sqrt();
                let denom = lhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
                worst = worst.max(diff / denom);
            }
        }
    }
    verdict(
        6,
        "unfoldings factor through kronecker lifts",
        worst <= 1e-10,
        &format!("20 lifted tensors, every (mode, s) pair, max relative residual {worst:.2e}, tol 1e-10"),
    );
}

#[test]
fn criterion_07_thresholding_satisfies_subgradient_optimality() {
    let mut rng = rng(707);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let rows = rng.random_range(4..=7);
        let cols = rng.random_range(4..=7);
        let a = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0));
        let tau = if case % 10 == 0 {
            // Occasionally kill every singular value to hit the B = 0 branch.
            1.5 * spectral_norm(&a).unwrap()
        } else {
            rng.random_range(0.1..1.5)
        };
        let (b, _) = svt(&a, tau).unwrap();
        let g = (&a - &b) / tau;
        let svd = thin_svd(&b).unwrap();
        let keep: Vec<usize> = svd
            .s
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 1e-10)
            .map(|(i, _)| i)
            .collect();
        let u1 = Array2::from_shape_fn((rows, keep.len()), |(i, j)| svd.u[[i, keep[j]]]);
        let v1 = Array2::from_shape_fn((cols, keep.len()), |(i, j)| svd.vt[[keep[j], i]]);
        let w = &g - &u1.dot(&v1.t());
        let row_ortho = u1.t().dot(&w).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let col_ortho = w.dot(&v1).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let excess = (spectral_norm(&w).unwrap() - 1.0).max(0.0);
        worst = worst.max(row_ortho).max(col_ortho).max(excess);
    }
    verdict(
        7,
        "thresholding satisfies subgradient optimality",
        worst <= 1e-8,
        &format!("100 matrices, max optimality violation {worst:.2e}, tol 1e-8"),
    );
}

fn dense_clamped_solve(obs: &ObservationSet, shift: f64, rhs: &DenseTensor, delta: f64) -> DenseTensor {
    let d = obs.numel();
    let mut a = Array2::<f64>::eye(d) * shift;
    for &idx in obs.linear_indices() {
        a[[idx - 1, idx - 1]] += 1.0;
    }
    let f = a.solve_into(Array1::from(rhs.data().to_vec())).unwrap();
    let data: Vec<f64> = f.iter().map(|v| v.clamp(-delta, delta)).collect();
    DenseTensor::new(rhs.dims().to_vec(), data).unwrap()
}

#[test]
fn criterion_08_estimate_updates_match_a_dense_solve() {
    let mut rng = rng(808);
    let mut worst = 0.0f64;
    for (dims, n, with_replacement) in [(vec![5, 5, 8], 150, true), (vec![4, 5, 5], 60, false)] {
        let truth = random_tensor(&dims, &mut rng);
        let noise = NoiseModel::new(NoiseFamily::Gaussian, 0.05).unwrap();
        let linear = sample_uniform(&mut rng, &dims, n, with_replacement).unwrap();
        let obs = observe(&truth, &linear, &noise, &mut rng).unwrap();
        let (counts, adjoint) = (obs.counts(), obs.adjoint());
        let order = dims.len();
        let (penalty, delta) = (0.7, 0.8);

        let aux: Vec<DenseTensor> = (0..order).map(|_| random_tensor(&dims, &mut rng)).collect();
        let duals: Vec<DenseTensor> = (0..order).map(|_| random_tensor(&dims, &mut rng)).collect();
        let fast = ntrc_estimate_update(&counts, &adjoint, &aux, &duals, penalty, delta).unwrap();
        let mut rhs = adjoint.clone();
        for (m, q) in aux.iter().zip(&duals) {
            for ((r, &mv), &qv) in rhs.data_mut().iter_mut().zip(m.data()).zip(q.data()) {
                *r += penalty * mv + qv;
            }
        }
        let slow = dense_clamped_solve(&obs, penalty * order as f64, &rhs, delta);
        worst = worst.max(max_abs_diff(&fast, &slow));

        let p = random_tensor(&dims, &mut rng);
        let w = random_tensor(&dims, &mut rng);
        let fast = fantrc_estimate_update(&counts, &adjoint, &p, &w, penalty, delta).unwrap();
        let mut rhs = adjoint.clone();
        for ((r, &pv), &wv) in rhs.data_mut().iter_mut().zip(p.data()).zip(w.data()) {
            *r += penalty * wv - pv;
        }
        let slow = dense_clamped_solve(&obs, penalty, &rhs, delta);
        worst = worst.max(max_abs_diff(&fast, &slow));
    }
    verdict(
        8,
        "entrywise estimate updates match a dense solve",
        worst <= 1e-10,
        &format!("both solvers at 200 and 100 entries, max abs deviation {worst:.2e}, tol 1e-10"),
    );
}

struct TunedRuns {
    truth_fro: f64,
    ntrc: (f64, SolveReport),
    fantrc: (f64, SolveReport),
}

static TUNED: OnceLock<TunedRuns> = OnceLock::new();

/// Reference completion instance shared by the accuracy and convergence
/// checks: a 20^4 rank-3 ring, 30% of entries observed without
/// replacement, gaussian noise at c = 0.01, and lambda tuned over a
/// multiplier grid around the closed-form default (the full grid for the
/// cheap factored solver, the inner four points for the full-size one).
fn tuned_runs() -> &'static TunedRuns {
    TUNED.get_or_init(|| {
        let mut rng = rng(9);
        let truth = random_tr(&mut rng, &[20; 4], &[3; 4]).unwrap().reconstruct().unwrap();
        let n = (0.3 * truth.numel() as f64).round() as usize;
        let linear = sample_uniform(&mut rng, truth.dims(), n, false).unwrap();
        let noise = NoiseModel::gaussian_level(0.01, &truth).unwrap();
        let obs = observe(&truth, &linear, &noise, &mut rng).unwrap();
        let base = lambda0(noise.noise_std(), n, truth.dims(), default_s(4)).unwrap();
        let delta = truth.inf_norm();

        let best = |kind: SolverKind, multipliers: &[f64]| -> (f64, SolveReport) {
            let mut best: Option<(f64, SolveReport)> = None;
            for &m in multipliers {
                let mut cfg = SolverConfig::new(base * m, delta).unwrap();
                cfg.track_objective = false;
                let outcome = match kind {
                    SolverKind::Ntrc => ntrc_solve(&obs, &cfg, Some(&truth)).unwrap(),
                    SolverKind::Fantrc => {
                        fantrc_solve(&obs, &[11; 4], &cfg, Some(&truth)).unwrap()
                    }
                };
                let re = outcome.report.relative_error.unwrap();
                if best.as_ref().is_none_or(|(b, _)| re < *b) {
                    best = Some((re, outcome.report));
                }
            }
            best.unwrap()
        };

        TunedRuns {
            truth_fro: truth.fro_norm(),
            ntrc: best(SolverKind::Ntrc, &[1e-2, 1e-1, 1.0, 1e1]),
            fantrc: best(SolverKind::Fantrc, &LAMBDA_MULTIPLIERS),
        }
    })
}

#[test]
fn criterion_09_tuned_solvers_reach_reference_accuracy() {
    let runs = tuned_runs();
    let pass = runs.ntrc.0 <= 0.012 && runs.fantrc.0 <= 0.0063;
    verdict(
        9,
        "tuned solvers reach reference accuracy",
        pass,
        &format!(
            "full solver RE {:.3e} (tol 1.2e-2), factored RE {:.3e} (tol 6.3e-3)",
            runs.ntrc.0, runs.fantrc.0
        ),
    );
}

#[test]
fn criterion_10_error_scales_linearly_with_squared_rank() {
    let mut spec = ExperimentSpec::desk(Protocol::RankScaling);
    spec.trials = 10;
    spec.lambda_multipliers = vec![1.0];
    spec.normalize = true;
    spec.seed = 10;
    let summaries = summarize(&run_protocol(&spec).unwrap());
    let xs: Vec<f64> = summaries.iter().map(|s| (s.rank * s.rank) as f64).collect();
    let ys: Vec<f64> = summaries.iter().map(|s| s.mean_estimation_error).collect();
    let (_, _, r2) = fit_linear(&xs, &ys).unwrap();
    let (_, _, r2_head) = fit_linear(&xs[..4], &ys[..4]).unwrap();
    verdict(
        10,
        "estimation error scales linearly with squared rank",
        r2 > 0.9,
        &format!(
            "ranks 1..=5 at 10^4, 10 trials, fit R^2 = {r2:.4}, want > 0.9 \
             (ranks 1..=4 alone fit at {r2_head:.4}; the rank-5 unfolding has \
             more degrees of freedom than there are samples and saturates)"
        ),
    );
}

#[test]
fn criterion_11_error_curves_align_at_matched_rescaled_samples() {
    let mut spec = ExperimentSpec::desk(Protocol::Sharpness);
    spec.trials = 10;
    spec.lambda_multipliers = vec![1.0];
    spec.seed = 11;
    let summaries = summarize(&run_protocol(&spec).unwrap());
    let curve = |side: usize| -> Vec<f64> {
        let mut points: Vec<(f64, f64)> = summaries
            .iter()
            .filter(|s| s.side == side)
            .map(|s| (s.rescaled_samples, s.mean_estimation_error))
            .collect();
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        points.into_iter().map(|(_, e)| e).collect()
    };
    let (small, large) = (curve(10), curve(20));
    let mut worst = 0.0f64;
    for (a, b) in small.iter().zip(&large) {
        worst = worst.max(a.max(*b) / a.min(*b));
    }
    verdict(
        11,
        "error curves align at matched rescaled sample counts",
        small.len() == large.len() && worst <= 2.0,
        &format!(
            "sides 10 and 20 at rescaled targets 0.5 and 0.9, worst cross-size ratio {worst:.3}, want <= 2"
        ),
    );
}

#[test]
fn criterion_12_roomy_cores_halve_the_error_of_tight_cores() {
    let mut spec = ExperimentSpec::desk(Protocol::FactorRankSweep);
    spec.lambda_multipliers = vec![1.0];
    spec.seed = 12;
    let summaries = summarize(&run_protocol(&spec).unwrap());
    // Rank 4 at headrooms 0.7 and 1.0 gives core extents 11 and 16.
    let err = |extent: usize| -> f64 {
        summaries
            .iter()
            .find(|s| s.core_extent == Some(extent))
            .map(|s| s.mean_relative_error)
            .unwrap_or(f64::NAN)
    };
    let (tight, roomy) = (err(11), err(16));
    verdict(
        12,
        "roomy cores halve the error of tight cores",
        roomy <= 0.5 * tight,
        &format!("30^4 rank 4, RE {roomy:.3e} at extent 16 vs {tight:.3e} at extent 11, want <= half"),
    );
}

#[test]
fn criterion_13_error_falls_with_sampling_for_every_noise_family() {
    let mut spec = ExperimentSpec::desk(Protocol::NoiseFamilies);
    spec.lambda_multipliers = vec![1.0];
    spec.seed = 13;
    let summaries = summarize(&run_protocol(&spec).unwrap());
    let mut detail = Vec::new();
    let mut pass = true;
    for family in ["gaussian", "uniform", "poisson"] {
        let mut points: Vec<(f64, f64)> = summaries
            .iter()
            .filter(|s| s.family == family)
            .map(|s| (s.sample_ratio, s.mean_relative_error))
            .collect();
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let res: Vec<f64> = points.iter().map(|p| p.1).collect();
        let mut inversions = 0usize;
        let mut bounded = true;
        for w in res.windows(2) {
            if w[1] > w[0] {
                inversions += 1;
                bounded &= w[1] <= 1.10 * w[0];
            }
        }
        pass &= res.len() == 5 && inversions <= 1 && bounded;
        detail.push(format!("{family}: {inversions} inversions"));
    }
    verdict(
        13,
        "error falls with sampling for every noise family",
        pass,
        &format!(
            "ratios 0.1..0.9 at 10^4, at most one inversion of <= 10% allowed; {}",
            detail.join(", ")
        ),
    );
}

#[test]
fn criterion_14_tuned_runs_converge_with_small_residuals() {
    let runs = tuned_runs();
    let ntrc = &runs.ntrc.1;
    let fantrc = &runs.fantrc.1;
    let cap = 1e-4 * runs.truth_fro;
    let last = |v: &Vec<f64>| v.last().copied().unwrap_or(f64::MAX);
    let ntrc_ok = ntrc.converged && ntrc.iterations <= 500 && last(&ntrc.rel_change) <= 1e-6;
    let fantrc_ok = fantrc.converged
        && fantrc.iterations <= 500
        && last(&fantrc.rel_change) <= 1e-6
        && last(&fantrc.residual_recon) <= cap
        && last(&fantrc.residual_core) <= cap;
    verdict(
        14,
        "tuned runs converge with small residuals",
        ntrc_ok && fantrc_ok,
        &format!(
            "full solver {} iters, factored {} iters, factored residuals {:.2e} and {:.2e} vs cap {:.2e}",
            ntrc.iterations,
            fantrc.iterations,
            last(&fantrc.residual_recon),
            last(&fantrc.residual_core),
            cap
        ),
    );
}

#[test]
fn criterion_15_benchmark_tables_reproduce_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_tring");
    let cases: &[(&str, &[&str])] = &[
        (
            "custom",
            &["--sides", "6", "--order", "3", "--ranks", "2", "--sr", "0.5", "--trials", "2",
              "--multipliers", "1", "--max-iter", "60", "--seed", "3"],
        ),
        (
            "factor_rank_sweep",
            &["--sides", "8", "--ranks", "2", "--headrooms", "1.0,1.5", "--sr", "0.5",
              "--trials", "1", "--multipliers", "1", "--max-iter", "60", "--seed", "4"],
        ),
        (
            "noise_families",
            &["--sides", "6", "--order", "3", "--sr", "0.3,0.7", "--trials", "1",
              "--multipliers", "1", "--max-iter", "40", "--seed", "5"],
        ),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (protocol, extra) in cases {
        let mut tables = Vec::new();
        for run in 0..2 {
            let records = dir.path().join(format!("{protocol}-{run}-records.csv"));
            let summary = dir.path().join(format!("{protocol}-{run}-summary.csv"));
            let out = Command::new(bin)
                .current_dir(dir.path())
                .arg("bench")
                .arg(protocol)
                .args(*extra)
                .arg("--records")
                .arg(&records)
                .arg("--summary")
                .arg(&summary)
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "bench {protocol} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            tables.push((
                std::fs::read(&records).unwrap(),
                std::fs::read(&summary).unwrap(),
            ));
        }
        let same = tables[0] == tables[1];
        pass &= same;
        detail.push(format!(
            "{protocol}: {}",
            if same { "identical" } else { "MISMATCH" }
        ));
    }
    verdict(
        15,
        "benchmark tables reproduce byte for byte",
        pass,
        &format!("records and summaries over two same-seed runs; {}", detail.join(", ")),
    );
}
