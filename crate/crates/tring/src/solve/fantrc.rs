//! Factored ADMM: the estimate is constrained to a Tucker manifold with
//! orthonormal factors, so the thresholding runs on the small core
//! instead of the full tensor.

use super::{relative_change, SolveOutcome, SolveReport, SolverConfig, SolverKind};
use crate::error::{Error, Result};
use crate::linalg::{procrustes, svt};
use crate::ring::tucker_rank_floor;
use crate::sampling::ObservationSet;
use crate::tensor::{canonical_unfold, mode_k_product, DenseTensor, UnfoldingSpec};
use ndarray::Array2;
use std::time::Instant;

/// Exact solution of the factored quadratic subproblem. With orthonormal
/// factors the normal operator is again diagonal:
///
/// ```text
///   f_i = (b_i - P_i + penalty * W_i) / (c_i + penalty)
/// ```
///
/// where `W` is the current factored reconstruction, followed by
/// clamping to `[-delta, delta]`.
pub fn fantrc_estimate_update(
    counts: &DenseTensor,
    adjoint: &DenseTensor,
    p: &DenseTensor,
    w: &DenseTensor,
    penalty: f64,
    delta: f64,
) -> Result<DenseTensor> {
    if p.dims() != counts.dims() || w.dims() != counts.dims() {
        return Err(Error::shape("dual/reconstruction extents do not match the estimate"));
    }
    let mut out = DenseTensor::zeros(counts.dims())?;
    for i in 0..out.numel() {
        let f = (adjoint.data()[i] - p.data()[i] + penalty * w.data()[i])
            / (counts.data()[i] + penalty);
        out.data_mut()[i] = f.clamp(-delta, delta);
    }
    Ok(out)
}

/// Warns when a requested core extent falls below `r_k * r_{k+1}`: a
/// ring tensor of those ranks may then have no exact representation in
/// the factored model.
pub fn fantrc_rank_warning(tr_ranks: &[usize], tucker_ranks: &[usize]) -> Option<String> {
    if tr_ranks.len() != tucker_ranks.len() {
        return Some("ring rank and core extent lists have different lengths".to_string());
    }
    let floor = tucker_rank_floor(tr_ranks);
    let tight: Vec<usize> = (1..=tr_ranks.len())
        .filter(|&m| tucker_ranks[m - 1] < floor[m - 1])
        .collect();
    if tight.is_empty() {
        None
    } else {
        Some(format!(
            "core extents {tucker_ranks:?} fall below the ring floor {floor:?} at modes {tight:?}; \
             exact recovery may be impossible"
        ))
    }
}

fn identity_columns(rows: usize, cols: usize) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for j in 0..cols {
        m[[j, j]] = 1.0;
    }
    m
}

/// Applies every factor (or its transpose) to the tensor, skipping
/// `skip` when it is nonzero.
fn multi_mode_product(
    t: &DenseTensor,
    factors: &[Array2<f64>],
    transpose: bool,
    skip: usize,
) -> Result<DenseTensor> {
    let mut cur = t.clone();
    for (m, u) in factors.iter().enumerate() {
        if m + 1 == skip {
            continue;
        }
        cur = if transpose {
            mode_k_product(&cur, &u.t().to_owned(), m + 1)?
        } else {
            mode_k_product(&cur, u, m + 1)?
        };
    }
    Ok(cur)
}

/// Runs the factored solver with the given core extents (one per mode,
/// each at most the matching tensor extent). `truth`, when given, is
/// only used to fill `relative_error` in the report.
pub fn fantrc_solve(
    obs: &ObservationSet,
    tucker_ranks: &[usize],
    cfg: &SolverConfig,
    truth: Option<&DenseTensor>,
) -> Result<SolveOutcome> {
    let start = Instant::now();
    let dims = obs.dims().to_vec();
    let order = dims.len();
    let (alpha, s) = cfg.resolve(order)?;
    if tucker_ranks.len() != order {
        return Err(Error::shape("need one core extent per mode"));
    }
    for (m, (&r, &d)) in tucker_ranks.iter().zip(&dims).enumerate() {
        if r == 0 || r > d {
            return Err(Error::invalid(format!(
                "core extent {r} at mode {} must lie in 1..={d}",
                m + 1
            )));
        }
    }
    if let Some(t) = truth {
        if t.dims() != dims.as_slice() {
            return Err(Error::shape("ground truth extents do not match observations"));
        }
    }
    let core_dims = tucker_ranks.to_vec();
    let specs = (1..=order)
        .map(|mode| UnfoldingSpec::circular(&core_dims, mode, s))
        .collect::<Result<Vec<_>>>()?;
    let counts = obs.counts();
    let adjoint = obs.adjoint();

    let mut factors: Vec<Array2<f64>> = dims
        .iter()
        .zip(&core_dims)
        .map(|(&d, &r)| identity_columns(d, r))
        .collect();
    let mut core = DenseTensor::zeros(&core_dims)?;
    let mut estimate = DenseTensor::zeros(&dims)?;
    let mut low_rank = vec![DenseTensor::zeros(&core_dims)?; order];
    let mut core_duals = vec![DenseTensor::zeros(&core_dims)?; order];
    let mut p = DenseTensor::zeros(&dims)?;
    let mut penalty = cfg.penalty0;

    let mut objective = Vec::new();
    let mut rel_change_hist = Vec::new();
    let mut residual_recon = Vec::new();
    let mut residual_core = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        // Shifted estimate P/eta + T, shared by the factor and core steps.
        let mut shifted = estimate.clone();
        for (sv, &pv) in shifted.data_mut().iter_mut().zip(p.data()) {
            *sv += pv / penalty;
        }

        // Orthogonal factor updates, one Procrustes problem per mode.
        for m in 1..=order {
            let b = multi_mode_product(&core, &factors, false, m)?;
            let g = canonical_unfold(&shifted, m)?.dot(&canonical_unfold(&b, m)?.t());
            factors[m - 1] = procrustes(&g)?;
        }

        // Core update: average the back-projected estimate with the
        // shifted thresholding splits.
        let mut next_core = multi_mode_product(&shifted, &factors, true, 0)?;
        for m in 0..order {
            for ((cv, &lv), &rv) in next_core
                .data_mut()
                .iter_mut()
                .zip(low_rank[m].data())
                .zip(core_duals[m].data())
            {
                *cv += lv + rv / penalty;
            }
        }
        let scale = 1.0 / (order as f64 + 1.0);
        next_core.data_mut().iter_mut().for_each(|v| *v *= scale);
        core = next_core;

        // Threshold each circular unfolding of the core.
        let mut nuclear = vec![0.0; order];
        let mut core_shift = DenseTensor::zeros(&core_dims)?;
        for m in 0..order {
            for ((sv, &cv), &rv) in core_shift
                .data_mut()
                .iter_mut()
                .zip(core.data())
                .zip(core_duals[m].data())
            {
                *sv = cv - rv / penalty;
            }
            let unfolded = specs[m].unfold(&core_shift)?;
            let (thresholded, svals) = svt(&unfolded, cfg.lambda * alpha[m] / penalty)?;
            nuclear[m] = svals.sum();
            low_rank[m] = specs[m].fold(&thresholded)?;
        }

        let w = multi_mode_product(&core, &factors, false, 0)?;
        let old_norm = estimate.fro_norm();
        let next = fantrc_estimate_update(&counts, &adjoint, &p, &w, penalty, cfg.delta)?;
        let rel = relative_change(next.data(), estimate.data(), old_norm);
        rel_change_hist.push(rel);
        estimate = next;

        let mut recon_sq = 0.0;
        for (pv, (&tv, &wv)) in p
            .data_mut()
            .iter_mut()
            .zip(estimate.data().iter().zip(w.data()))
        {
            let gap = tv - wv;
            recon_sq += gap * gap;
            *pv += penalty * gap;
        }
        residual_recon.push(recon_sq.sqrt());
        let mut worst_core = 0.0f64;
        for m in 0..order {
            let mut gap_sq = 0.0;
            for (rv, (&lv, &cv)) in core_duals[m]
                .data_mut()
                .iter_mut()
                .zip(low_rank[m].data().iter().zip(core.data()))
            {
                let gap = lv - cv;
                gap_sq += gap * gap;
                *rv += penalty * gap;
            }
            worst_core = worst_core.max(gap_sq.sqrt());
        }
        residual_core.push(worst_core);

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
            solver: SolverKind::Fantrc,
            iterations,
            converged,
            final_penalty: penalty,
            wall_time_s: start.elapsed().as_secs_f64(),
            relative_error,
            objective,
            rel_change: rel_change_hist,
            residual_recon,
            residual_core,
            warnings,
        },
        estimate,
    })
}
