//! Full-size ADMM: one auxiliary tensor and one scaled dual per circular
//! unfolding, singular value thresholding at the tensor's own extents.

use super::{relative_change, SolveOutcome, SolveReport, SolverConfig, SolverKind};
use crate::error::{Error, Result};
use crate::linalg::svt;
use crate::sampling::ObservationSet;
use crate::tensor::{DenseTensor, UnfoldingSpec};
use std::time::Instant;

/// Exact solution of the quadratic estimate subproblem. The normal
/// operator `X X^T + penalty * K * I` is diagonal with the per-entry
/// sample multiplicities `c_i` on the observed coordinates, so
///
/// ```text
///   f_i = (b_i + sum_k (Q^k + penalty * M^k)_i) / (c_i + penalty * K)
/// ```
///
/// with `b_i` the adjoint of the observed values, followed by clamping
/// to `[-delta, delta]`.
pub fn ntrc_estimate_update(
    counts: &DenseTensor,
    adjoint: &DenseTensor,
    aux: &[DenseTensor],
    duals: &[DenseTensor],
    penalty: f64,
    delta: f64,
) -> Result<DenseTensor> {
    if aux.len() != duals.len() || aux.is_empty() {
        return Err(Error::shape("need one auxiliary and one dual tensor per mode"));
    }
    let k = aux.len() as f64;
    let mut out = DenseTensor::zeros(counts.dims())?;
    for (m, q) in aux.iter().zip(duals) {
        if m.dims() != counts.dims() || q.dims() != counts.dims() {
            return Err(Error::shape("auxiliary/dual extents do not match the estimate"));
        }
        for ((o, &mv), &qv) in out.data_mut().iter_mut().zip(m.data()).zip(q.data()) {
            *o += penalty * mv + qv;
        }
    }
    for ((o, &c), &b) in out.data_mut().iter_mut().zip(counts.data()).zip(adjoint.data()) {
        *o = ((b + *o) / (c + penalty * k)).clamp(-delta, delta);
    }
    Ok(out)
}

/// Runs the full-size solver. `truth`, when given, is only used to fill
/// `relative_error` in the report.
pub fn ntrc_solve(
    obs: &ObservationSet,
    cfg: &SolverConfig,
    truth: Option<&DenseTensor>,
) -> Result<SolveOutcome> {
    let start = Instant::now();
    let dims = obs.dims().to_vec();
    let order = dims.len();
    let (alpha, s) = cfg.resolve(order)?;
    if let Some(t) = truth {
        if t.dims() != dims.as_slice() {
            return Err(Error::shape("ground truth extents do not match observations"));
        }
    }
    let specs = (1..=order)
        .map(|mode| UnfoldingSpec::circular(&dims, mode, s))
        .collect::<Result<Vec<_>>>()?;
    let counts = obs.counts();
    let adjoint = obs.adjoint();

    let mut estimate = DenseTensor::zeros(&dims)?;
    let mut aux = vec![DenseTensor::zeros(&dims)?; order];
    let mut duals = vec![DenseTensor::zeros(&dims)?; order];
    let mut penalty = cfg.penalty0;

    let mut objective = Vec::new();
    let mut rel_change_hist = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        // Threshold each unfolding of T - Q^k / penalty.
        let mut nuclear = vec![0.0; order];
        let mut shifted = DenseTensor::zeros(&dims)?;
        for m in 0..order {
            for ((sv, &tv), &qv) in shifted
                .data_mut()
                .iter_mut()
                .zip(estimate.data())
                .zip(duals[m].data())
            {
                *sv = tv - qv / penalty;
            }
            let unfolded = specs[m].unfold(&shifted)?;
            let (thresholded, svals) = svt(&unfolded, cfg.lambda * alpha[m] / penalty)?;
            nuclear[m] = svals.sum();
            aux[m] = specs[m].fold(&thresholded)?;
        }

        let old_norm = estimate.fro_norm();
        let next = ntrc_estimate_update(&counts, &adjoint, &aux, &duals, penalty, cfg.delta)?;
        let rel = relative_change(next.data(), estimate.data(), old_norm);
        rel_change_hist.push(rel);

        for m in 0..order {
            for ((qv, &mv), &tv) in duals[m]
                .data_mut()
                .iter_mut()
                .zip(aux[m].data())
                .zip(next.data())
            {
                *qv += penalty * (mv - tv);
            }
        }
        estimate = next;

        if cfg.track_objective {
            let reg: f64 = alpha.iter().zip(&nuclear).map(|(a, n)| a * n).sum();
            objective.push(obs.half_squared_residual(&estimate)? + cfg.lambda * reg);
        }

        penalty = (penalty * cfg.growth).min(cfg.penalty_max);
        if rel <= cfg.tol {
            converged = true;
            break;
        }
    }

    let relative_error = match truth {
        Some(t) => Some(crate::experiments::relative_error(&estimate, t)?),
        None => None,
    };
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!("did not converge within {} iterations", cfg.max_iter));
    }
    Ok(SolveOutcome {
        report: SolveReport {
            solver: SolverKind::Ntrc,
            iterations,
            converged,
            final_penalty: penalty,
            wall_time_s: start.elapsed().as_secs_f64(),
            relative_error,
            objective,
            rel_change: rel_change_hist,
            residual_recon: Vec::new(),
            residual_core: Vec::new(),
            warnings,
        },
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::random_tr;
    use crate::sampling::{observe, sample_uniform, NoiseModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_observations_yield_zero_tensor_immediately() {
        let obs = ObservationSet::new(vec![3, 3, 3], vec![1, 5, 9], vec![0.0; 3]).unwrap();
        let cfg = SolverConfig::new(0.1, 1.0).unwrap();
        let out = ntrc_solve(&obs, &cfg, None).unwrap();
        assert!(out.report.converged);
        assert!(out.report.iterations <= 2);
        assert!(out.estimate.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn interpolates_fully_observed_noiseless_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let truth = random_tr(&mut rng, &[4, 4, 4], &[2, 2, 2])
            .unwrap()
            .reconstruct()
            .unwrap();
        let all: Vec<usize> = (1..=truth.numel()).collect();
        let obs = observe(&truth, &all, &NoiseModel::noiseless(), &mut rng).unwrap();
        let mut cfg = SolverConfig::new(1e-10, 10.0 * truth.inf_norm()).unwrap();
        cfg.max_iter = 300;
        let out = ntrc_solve(&obs, &cfg, Some(&truth)).unwrap();
        assert!(out.report.relative_error.unwrap() < 1e-6);
    }

    #[test]
    fn estimate_stays_within_the_entry_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let truth = random_tr(&mut rng, &[5, 5, 5], &[2, 2, 2])
            .unwrap()
            .reconstruct()
            .unwrap();
        let idx = sample_uniform(&mut rng, truth.dims(), 60, false).unwrap();
        let obs = observe(&truth, &idx, &NoiseModel::noiseless(), &mut rng).unwrap();
        let delta = 0.5 * truth.inf_norm();
        let mut cfg = SolverConfig::new(1e-4, delta).unwrap();
        cfg.max_iter = 50;
        let out = ntrc_solve(&obs, &cfg, None).unwrap();
        assert!(out.estimate.inf_norm() <= delta + 1e-12);
    }

    #[test]
    fn estimate_update_matches_hand_computation() {
        // Single mode pair, 1x2 tensor: entry 1 observed twice (values
        // 1 and 3), entry 2 unobserved.
        let counts = DenseTensor::new(vec![1, 2], vec![2.0, 0.0]).unwrap();
        let adjoint = DenseTensor::new(vec![1, 2], vec![4.0, 0.0]).unwrap();
        let aux = vec![DenseTensor::new(vec![1, 2], vec![0.5, 0.25]).unwrap()];
        let duals = vec![DenseTensor::new(vec![1, 2], vec![0.1, -0.05]).unwrap()];
        let penalty = 2.0;
        let f = ntrc_estimate_update(&counts, &adjoint, &aux, &duals, penalty, 10.0).unwrap();
        let f1 = (4.0 + 0.1 + penalty * 0.5) / (2.0 + penalty);
        let f2 = (-0.05 + penalty * 0.25) / penalty;
        assert!((f.data()[0] - f1).abs() < 1e-15);
        assert!((f.data()[1] - f2).abs() < 1e-15);
        // Unobserved entries collapse to the average of M^k + Q^k / penalty.
        assert!((f.data()[1] - (0.25 + -0.05 / penalty)).abs() < 1e-15);
        let clipped = ntrc_estimate_update(&counts, &adjoint, &aux, &duals, penalty, 0.2).unwrap();
        assert_eq!(clipped.data(), &[0.2, 0.2]);
    }
}
