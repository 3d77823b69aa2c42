//! Recovery metrics and the synthetic benchmark protocols, emitting
//! per-trial records and per-cell summaries as CSV.

use crate::error::{Error, Result};
use crate::ring::random_tr;
use crate::sampling::{
    lambda0, observe, sample_uniform, NoiseFamily, NoiseModel, LAMBDA_MULTIPLIERS,
};
use crate::solve::{fantrc_solve, ntrc_solve, SolveOutcome, SolverConfig, SolverKind};
use crate::tensor::{default_s, DenseTensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// `||hat - star||_F / ||star||_F`. The reference must be nonzero.
pub fn relative_error(hat: &DenseTensor, star: &DenseTensor) -> Result<f64> {
    if hat.dims() != star.dims() {
        return Err(Error::shape("relative error needs matching extents"));
    }
    let denom = star.fro_norm();
    if denom == 0.0 {
        return Err(Error::invalid("relative error against a zero reference"));
    }
    let diff: f64 = hat
        .data()
        .iter()
        .zip(star.data())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(diff.sqrt() / denom)
}

/// Which ratio the peak signal-to-noise computation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsnrForm {
    /// `10 log10(D ||hat||_inf / ||hat - star||_F)`, the amplitude ratio.
    Amplitude,
    /// `10 log10(D ||hat||_inf^2 / ||hat - star||_F^2)`, the usual
    /// power ratio for comparing against other tools.
    Squared,
}

/// Peak signal-to-noise ratio in dB. An exact match reports +inf.
pub fn psnr(hat: &DenseTensor, star: &DenseTensor, form: PsnrForm) -> Result<f64> {
    if hat.dims() != star.dims() {
        return Err(Error::shape("psnr needs matching extents"));
    }
    let diff: f64 = hat
        .data()
        .iter()
        .zip(star.data())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if diff == 0.0 {
        return Ok(f64::INFINITY);
    }
    let d = hat.numel() as f64;
    let peak = hat.inf_norm();
    Ok(match form {
        PsnrForm::Amplitude => 10.0 * (d * peak / diff).log10(),
        PsnrForm::Squared => 10.0 * (d * peak * peak / (diff * diff)).log10(),
    })
}

fn cubical_side(dims: &[usize]) -> Result<usize> {
    let side = dims[0];
    if dims.is_empty() || dims.iter().any(|&d| d != side) {
        return Err(Error::invalid("rescaled sample count is defined for cubical tensors only"));
    }
    Ok(side)
}

/// Denominator of the rescaled observation count for a cubical tensor
/// with uniform rank: `r^2 K d^ceil(K/2) ln(d^floor(K/2) + d^ceil(K/2))`.
pub fn sample_denominator(dims: &[usize], rank: usize) -> Result<f64> {
    let side = cubical_side(dims)? as f64;
    let k = dims.len();
    if rank == 0 {
        return Err(Error::invalid("rank must be positive"));
    }
    let hi = side.powi(k.div_ceil(2) as i32);
    let lo = side.powi((k / 2) as i32);
    Ok((rank * rank * k) as f64 * hi * (lo + hi).ln())
}

/// `N` divided by the sample-complexity denominator; aligns error
/// curves across tensor sizes when the recovery bound is sharp.
pub fn rescaled_samples(n: usize, dims: &[usize], rank: usize) -> Result<f64> {
    Ok(n as f64 / sample_denominator(dims, rank)?)
}

/// Inverse of [`rescaled_samples`]: the observation count hitting a
/// rescaled target, clamped to `[1, numel]`.
pub fn sample_budget(target: f64, dims: &[usize], rank: usize) -> Result<usize> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::invalid("rescaled sample target must be positive and finite"));
    }
    let numel: usize = dims.iter().product();
    let n = (target * sample_denominator(dims, rank)?).round() as usize;
    Ok(n.clamp(1, numel))
}

/// Squared weighted sum of the circular unfolding rank bounds,
/// `(sum_k alpha_k sqrt(r_k r_{k+s}))^2`; collapses to `r^2` for
/// uniform ranks and weights.
pub fn tr_rank_constant(alpha: &[f64], ranks: &[usize], s: usize) -> Result<f64> {
    let k = ranks.len();
    if alpha.len() != k || k == 0 {
        return Err(Error::shape("weights and ranks lengths differ"));
    }
    if s == 0 || s >= k {
        return Err(Error::invalid("shift must lie in 1..order"));
    }
    let sum: f64 = (0..k)
        .map(|m| alpha[m] * ((ranks[m] * ranks[(m + s) % k]) as f64).sqrt())
        .sum();
    Ok(sum * sum)
}

/// Ordinary least squares fit, returning `(slope, intercept, r_squared)`.
pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::invalid("linear fit needs at least three paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("linear fit over constant abscissae"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, intercept, r2))
}

/// The benchmark protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Error versus the rescaled observation count across tensor sizes.
    Sharpness,
    /// Error versus the squared uniform rank at fixed sampling ratio.
    RankScaling,
    /// Error versus sampling ratio under three noise distributions.
    NoiseFamilies,
    /// Error versus rank across the sub/critical/supercritical regimes.
    Multistate,
    /// Factored-solver error versus the prescribed core extent.
    FactorRankSweep,
    /// Plain sweep over whatever grids the caller configures.
    Custom,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Sharpness => "sharpness",
            Protocol::RankScaling => "rank_scaling",
            Protocol::NoiseFamilies => "noise_families",
            Protocol::Multistate => "multistate",
            Protocol::FactorRankSweep => "factor_rank_sweep",
            Protocol::Custom => "custom",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharpness" => Ok(Protocol::Sharpness),
            "rank_scaling" => Ok(Protocol::RankScaling),
            "noise_families" => Ok(Protocol::NoiseFamilies),
            "multistate" => Ok(Protocol::Multistate),
            "factor_rank_sweep" => Ok(Protocol::FactorRankSweep),
            "custom" => Ok(Protocol::Custom),
            other => Err(Error::invalid(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Uniform rank rule used by the size-driven protocols:
/// `ceil(sqrt(ln d))`.
pub fn default_synthetic_rank(side: usize) -> usize {
    ((side as f64).ln().sqrt().ceil() as usize).max(1)
}

/// Full description of one benchmark run. All grids are outer-product
/// coordinates; which ones a protocol reads is documented per variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub protocol: Protocol,
    /// Tensor order; every synthetic tensor is cubical `side^order`.
    pub order: usize,
    pub sides: Vec<usize>,
    /// Uniform ranks. Empty means the `ceil(sqrt(ln d))` rule.
    pub ranks: Vec<usize>,
    pub sampling_ratios: Vec<f64>,
    /// Rescaled observation targets for the sharpness protocol.
    pub sample_targets: Vec<f64>,
    /// Gaussian noise levels `c` with `sigma = c ||T||_F / sqrt(D)`.
    pub noise_levels: Vec<f64>,
    pub families: Vec<NoiseFamily>,
    /// Core extent multipliers `R = round(h r^2)` for the factored sweep.
    pub headrooms: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverKind,
    pub lambda_multipliers: Vec<f64>,
    /// Scale the ground truth to unit Frobenius norm before observing.
    pub normalize: bool,
    pub psnr_form: PsnrForm,
    pub max_iter: usize,
    pub tol: f64,
}

impl ExperimentSpec {
    /// Small grids that finish in minutes on one core.
    pub fn desk(protocol: Protocol) -> Self {
        let mut spec = ExperimentSpec {
            protocol,
            order: 4,
            sides: vec![10],
            ranks: Vec::new(),
            sampling_ratios: vec![0.4],
            sample_targets: Vec::new(),
            noise_levels: vec![0.01],
            families: vec![NoiseFamily::Gaussian],
            headrooms: Vec::new(),
            trials: 5,
            seed: 0,
            solver: SolverKind::Ntrc,
            lambda_multipliers: vec![0.1, 1.0, 10.0],
            normalize: false,
            psnr_form: PsnrForm::Amplitude,
            max_iter: 500,
            tol: 1e-6,
        };
        match protocol {
            Protocol::Sharpness => {
                spec.sides = vec![10, 20];
                spec.sample_targets = vec![0.5, 0.9];
                spec.normalize = true;
            }
            Protocol::RankScaling => {
                spec.ranks = (1..=5).collect();
            }
            Protocol::NoiseFamilies => {
                spec.sampling_ratios = vec![0.1, 0.3, 0.5, 0.7, 0.9];
                spec.families = vec![
                    NoiseFamily::Gaussian,
                    NoiseFamily::Uniform,
                    NoiseFamily::Poisson { rate: 0.01 },
                ];
            }
            Protocol::Multistate => {
                spec.sides = vec![12];
                spec.ranks = vec![2, 4];
                spec.noise_levels = vec![0.05];
            }
            Protocol::FactorRankSweep => {
                spec.sides = vec![30];
                spec.ranks = vec![4];
                spec.headrooms = vec![0.7, 1.0];
                spec.solver = SolverKind::Fantrc;
            }
            Protocol::Custom => {
                spec.ranks = vec![2];
                spec.trials = 3;
            }
        }
        spec
    }

    /// The published grids; hours of compute at 25 trials.
    pub fn full(protocol: Protocol) -> Self {
        let mut spec = Self::desk(protocol);
        spec.trials = 25;
        spec.lambda_multipliers = LAMBDA_MULTIPLIERS.to_vec();
        match protocol {
            Protocol::Sharpness => {
                spec.sides = vec![10, 20, 30];
                spec.sample_targets = (1..=8).map(|i| 0.25 * i as f64).collect();
            }
            Protocol::RankScaling => {
                spec.sides = vec![10, 20];
                spec.ranks = (1..=6).collect();
            }
            Protocol::NoiseFamilies => {
                spec.sides = vec![10, 20];
            }
            Protocol::Multistate => {
                spec.sides = vec![30];
                spec.ranks = (2..=7).collect();
                spec.noise_levels = vec![0.01, 0.05];
            }
            Protocol::FactorRankSweep => {
                spec.sides = vec![30, 50];
                spec.ranks = (3..=6).collect();
                spec.headrooms = (7..=15).map(|i| 0.1 * i as f64).collect();
            }
            Protocol::Custom => {}
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::invalid("order must be at least 2"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.sides.is_empty() || self.sides.contains(&0) {
            return Err(Error::invalid("sides grid must be non-empty and positive"));
        }
        if self.lambda_multipliers.is_empty()
            || self.lambda_multipliers.iter().any(|&m| !(m > 0.0) || !m.is_finite())
        {
            return Err(Error::invalid("lambda multipliers must be positive and finite"));
        }
        if self.sampling_ratios.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::invalid("sampling ratios must lie in (0, 1]"));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::invalid("iteration cap and tolerance must be positive"));
        }
        match self.protocol {
            Protocol::Sharpness if self.sample_targets.is_empty() => {
                Err(Error::invalid("sharpness needs rescaled sample targets"))
            }
            Protocol::RankScaling | Protocol::Multistate if self.ranks.is_empty() => {
                Err(Error::invalid("this protocol needs an explicit rank grid"))
            }
            Protocol::FactorRankSweep if self.ranks.is_empty() || self.headrooms.is_empty() => {
                Err(Error::invalid("the factored sweep needs rank and headroom grids"))
            }
            _ => Ok(()),
        }
    }
}

/// One solved trial. Wall time stays out of the CSV so reruns with the
/// same seed are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct MetricRecord {
    pub protocol: Protocol,
    pub solver: SolverKind,
    pub trial: usize,
    pub side: usize,
    pub order: usize,
    pub rank: usize,
    pub core_extent: Option<usize>,
    pub family: &'static str,
    pub noise_level: f64,
    pub sample_ratio: f64,
    pub samples: usize,
    pub rescaled_samples: f64,
    pub lambda: f64,
    pub lambda_multiplier: f64,
    pub relative_error: f64,
    pub psnr: f64,
    pub estimation_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub note: String,
    #[serde(rename = "wall_time_s")]
    pub wall_time_s: f64,
}

/// Mean and spread over the trials of one grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRecord {
    pub protocol: Protocol,
    pub solver: SolverKind,
    pub side: usize,
    pub order: usize,
    pub rank: usize,
    pub core_extent: Option<usize>,
    pub family: &'static str,
    pub noise_level: f64,
    pub sample_ratio: f64,
    pub rescaled_samples: f64,
    pub trials: usize,
    pub mean_relative_error: f64,
    pub std_relative_error: f64,
    pub mean_psnr: f64,
    pub mean_estimation_error: f64,
    pub mean_iterations: f64,
}

enum Budget {
    Ratio(f64),
    Rescaled(f64),
}

struct Cell {
    side: usize,
    rank: usize,
    family: NoiseFamily,
    noise_level: f64,
    budget: Budget,
    /// Core extents sharing this cell's datasets; `None` entries run
    /// the full-size solver.
    cores: Vec<Option<usize>>,
}

fn solver_cores(spec: &ExperimentSpec, side: usize, rank: usize) -> Vec<Option<usize>> {
    match spec.solver {
        SolverKind::Ntrc => vec![None],
        SolverKind::Fantrc => {
            let h = spec.headrooms.first().copied().unwrap_or(1.2);
            vec![Some(core_extent(h, rank, side))]
        }
    }
}

fn core_extent(headroom: f64, rank: usize, side: usize) -> usize {
    (((headroom * (rank * rank) as f64).round() as usize).max(1)).min(side)
}

fn build_cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let mut cells = Vec::new();
    let c0 = spec.noise_levels.first().copied().unwrap_or(0.01);
    match spec.protocol {
        Protocol::Sharpness => {
            for &side in &spec.sides {
                let rank = default_synthetic_rank(side);
                for &t in &spec.sample_targets {
                    cells.push(Cell {
                        side,
                        rank,
                        family: NoiseFamily::Gaussian,
                        noise_level: c0,
                        budget: Budget::Rescaled(t),
                        cores: solver_cores(spec, side, rank),
                    });
                }
            }
        }
        Protocol::RankScaling | Protocol::Multistate => {
            let ratio = spec.sampling_ratios.first().copied().unwrap_or(0.4);
            for &side in &spec.sides {
                for &rank in &spec.ranks {
                    for &c in &spec.noise_levels {
                        cells.push(Cell {
                            side,
                            rank,
                            family: NoiseFamily::Gaussian,
                            noise_level: c,
                            budget: Budget::Ratio(ratio),
                            cores: solver_cores(spec, side, rank),
                        });
                    }
                }
            }
        }
        Protocol::NoiseFamilies => {
            for &side in &spec.sides {
                let rank = if spec.ranks.is_empty() {
                    default_synthetic_rank(side)
                } else {
                    spec.ranks[0]
                };
                for family in &spec.families {
                    for &ratio in &spec.sampling_ratios {
                        cells.push(Cell {
                            side,
                            rank,
                            family: *family,
                            noise_level: c0,
                            budget: Budget::Ratio(ratio),
                            cores: solver_cores(spec, side, rank),
                        });
                    }
                }
            }
        }
        Protocol::FactorRankSweep => {
            let ratio = spec.sampling_ratios.first().copied().unwrap_or(0.4);
            for &side in &spec.sides {
                for &rank in &spec.ranks {
                    let cores = spec
                        .headrooms
                        .iter()
                        .map(|&h| Some(core_extent(h, rank, side)))
                        .collect();
                    cells.push(Cell {
                        side,
                        rank,
                        family: NoiseFamily::Gaussian,
                        noise_level: c0,
                        budget: Budget::Ratio(ratio),
                        cores,
                    });
                }
            }
        }
        Protocol::Custom => {
            for &side in &spec.sides {
                for &rank in &spec.ranks {
                    for family in &spec.families {
                        for &ratio in &spec.sampling_ratios {
                            for &c in &spec.noise_levels {
                                cells.push(Cell {
                                    side,
                                    rank,
                                    family: *family,
                                    noise_level: c,
                                    budget: Budget::Ratio(ratio),
                                    cores: solver_cores(spec, side, rank),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    cells
}

fn noise_for(family: NoiseFamily, level: f64, truth: &DenseTensor) -> Result<NoiseModel> {
    match family {
        NoiseFamily::Gaussian => NoiseModel::gaussian_level(level, truth),
        other => NoiseModel::new(other, 1.0),
    }
}

/// Runs every grid cell of `spec` for every trial, solving the same
/// dataset once per candidate penalty scale (and once per core extent
/// for the factored sweep) and keeping the best by relative error. Each
/// (cell, trial) pair owns its own RNG stream, so results do not depend
/// on execution order. A failed solve produces a record with NaN
/// metrics and the failure text in `note`; the run continues.
pub fn run_protocol(spec: &ExperimentSpec) -> Result<Vec<MetricRecord>> {
    spec.validate()?;
    let cells = build_cells(spec);
    let trials = spec.trials as u64;
    let mut records = Vec::new();
    for (cell_id, cell) in cells.iter().enumerate() {
        for trial in 0..spec.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(cell_id as u64 * trials + trial as u64);
            records.extend(run_cell_trial(spec, cell, trial + 1, &mut rng)?);
        }
    }
    Ok(records)
}

fn run_cell_trial(
    spec: &ExperimentSpec,
    cell: &Cell,
    trial: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<MetricRecord>> {
    let dims = vec![cell.side; spec.order];
    let ranks = vec![cell.rank; spec.order];
    let mut truth = random_tr(rng, &dims, &ranks)?.reconstruct()?;
    if spec.normalize {
        let norm = truth.fro_norm();
        if norm == 0.0 {
            return Err(Error::numerical("degenerate zero ground truth"));
        }
        truth.data_mut().iter_mut().for_each(|v| *v /= norm);
    }
    let numel = truth.numel();
    let n = match cell.budget {
        Budget::Ratio(p) => (((p * numel as f64).round() as usize).max(1)).min(numel),
        Budget::Rescaled(t) => sample_budget(t, &dims, cell.rank)?,
    };
    let noise = noise_for(cell.family, cell.noise_level, &truth)?;
    let linear = sample_uniform(rng, &dims, n, false)?;
    let obs = observe(&truth, &linear, &noise, rng)?;
    let base = lambda0(noise.noise_std(), n, &dims, default_s(spec.order))?;
    let delta = truth.inf_norm();
    let n0 = rescaled_samples(n, &dims, cell.rank)?;

    let mut out = Vec::new();
    for &core in &cell.cores {
        let mut best: Option<(f64, MetricRecord)> = None;
        for &mult in &spec.lambda_multipliers {
            let mut cfg = SolverConfig::new(mult * base, delta)?;
            cfg.max_iter = spec.max_iter;
            cfg.tol = spec.tol;
            cfg.track_objective = false;
            let solved: Result<SolveOutcome> = match core {
                None => ntrc_solve(&obs, &cfg, Some(&truth)),
                Some(r) => fantrc_solve(&obs, &vec![r; spec.order], &cfg, Some(&truth)),
            };
            let record = match solved {
                Ok(outcome) => {
                    let re = outcome.report.relative_error.unwrap_or(f64::NAN);
                    let err_sq: f64 = outcome
                        .estimate
                        .data()
                        .iter()
                        .zip(truth.data())
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum();
                    MetricRecord {
                        protocol: spec.protocol,
                        solver: outcome.report.solver,
                        trial,
                        side: cell.side,
                        order: spec.order,
                        rank: cell.rank,
                        core_extent: core,
                        family: cell.family.name(),
                        noise_level: cell.noise_level,
                        sample_ratio: n as f64 / numel as f64,
                        samples: n,
                        rescaled_samples: n0,
                        lambda: mult * base,
                        lambda_multiplier: mult,
                        relative_error: re,
                        psnr: psnr(&outcome.estimate, &truth, spec.psnr_form)?,
                        estimation_error: err_sq,
                        iterations: outcome.report.iterations,
                        converged: outcome.report.converged,
                        note: String::new(),
                        wall_time_s: outcome.report.wall_time_s,
                    }
                }
                Err(e) => MetricRecord {
                    protocol: spec.protocol,
                    solver: spec.solver,
                    trial,
                    side: cell.side,
                    order: spec.order,
                    rank: cell.rank,
                    core_extent: core,
                    family: cell.family.name(),
                    noise_level: cell.noise_level,
                    sample_ratio: n as f64 / numel as f64,
                    samples: n,
                    rescaled_samples: n0,
                    lambda: mult * base,
                    lambda_multiplier: mult,
                    relative_error: f64::NAN,
                    psnr: f64::NAN,
                    estimation_error: f64::NAN,
                    iterations: 0,
                    converged: false,
                    note: e.to_string(),
                    wall_time_s: 0.0,
                },
            };
            let score = if record.relative_error.is_nan() {
                f64::INFINITY
            } else {
                record.relative_error
            };
            if best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((score, record));
            }
        }
        out.push(best.expect("at least one multiplier").1);
    }
    Ok(out)
}

/// Means over trials, grouped by every coordinate except the trial
/// index, in first-appearance order. Failed trials are excluded.
pub fn summarize(records: &[MetricRecord]) -> Vec<SummaryRecord> {
    let mut order: Vec<(String, Vec<&MetricRecord>)> = Vec::new();
    for r in records.iter().filter(|r| r.note.is_empty()) {
        let key = format!(
            "{}|{}|{}|{}|{}|{:?}|{}|{}|{}",
            r.protocol,
            r.solver,
            r.side,
            r.order,
            r.rank,
            r.core_extent,
            r.family,
            r.noise_level.to_bits(),
            r.sample_ratio.to_bits(),
        );
        match order.iter_mut().find(|(k, _)| *k == key) {
            Some((_, group)) => group.push(r),
            None => order.push((key, vec![r])),
        }
    }
    order
        .into_iter()
        .map(|(_, group)| {
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&MetricRecord) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            let mean_re = mean(&|r| r.relative_error);
            let var_re = group
                .iter()
                .map(|r| (r.relative_error - mean_re) * (r.relative_error - mean_re))
                .sum::<f64>()
                / n;
            let first = group[0];
            SummaryRecord {
                protocol: first.protocol,
                solver: first.solver,
                side: first.side,
                order: first.order,
                rank: first.rank,
                core_extent: first.core_extent,
                family: first.family,
                noise_level: first.noise_level,
                sample_ratio: first.sample_ratio,
                rescaled_samples: mean(&|r| r.rescaled_samples),
                trials: group.len(),
                mean_relative_error: mean_re,
                std_relative_error: var_re.sqrt(),
                mean_psnr: mean(&|r| r.psnr),
                mean_estimation_error: mean(&|r| r.estimation_error),
                mean_iterations: mean(&|r| r.iterations as f64),
            }
        })
        .collect()
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders per-trial records with a header row. Floats use the shortest
/// round-trip decimal form, independent of locale; wall time is omitted
/// so equal-seed reruns emit identical bytes.
pub fn records_to_csv(records: &[MetricRecord]) -> String {
    let mut out = String::from(
        "protocol,solver,trial,side,order,rank,core_extent,family,noise_level,sample_ratio,\
         samples,rescaled_samples,lambda,lambda_multiplier,relative_error,psnr,\
         estimation_error,iterations,converged,note\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.protocol,
            r.solver,
            r.trial,
            r.side,
            r.order,
            r.rank,
            opt_usize(r.core_extent),
            r.family,
            r.noise_level,
            r.sample_ratio,
            r.samples,
            r.rescaled_samples,
            r.lambda,
            r.lambda_multiplier,
            r.relative_error,
            r.psnr,
            r.estimation_error,
            r.iterations,
            r.converged,
            csv_escape(&r.note),
        ));
    }
    out
}

/// Renders per-cell summaries with a header row.
pub fn summaries_to_csv(summaries: &[SummaryRecord]) -> String {
    let mut out = String::from(
        "protocol,solver,side,order,rank,core_extent,family,noise_level,sample_ratio,\
         rescaled_samples,trials,mean_relative_error,std_relative_error,mean_psnr,\
         mean_estimation_error,mean_iterations\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.protocol,
            s.solver,
            s.side,
            s.order,
            s.rank,
            opt_usize(s.core_extent),
            s.family,
            s.noise_level,
            s.sample_ratio,
            s.rescaled_samples,
            s.trials,
            s.mean_relative_error,
            s.std_relative_error,
            s.mean_psnr,
            s.mean_estimation_error,
            s.mean_iterations,
        ));
    }
    out
}
