use crate::config::FileConfig;
use crate::{BenchArgs, CompleteArgs, InpaintArgs, InspectArgs, SolverArgs, SynthArgs};
use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;
use tring::experiments::{
    psnr, records_to_csv, run_protocol, summaries_to_csv, summarize, ExperimentSpec, PsnrForm,
};
use tring::io::{
    read_observations_file, read_ppm_file, read_tensor_file, vdt_detensorize, vdt_tensorize,
    write_observations_file, write_ppm_file, write_tensor_file,
};
use tring::linalg::{nuclear_norm, numerical_rank, spectral_norm};
use tring::ring::{random_tr, suggested_tucker_ranks, trnn, trnn_dual_upper, uniform_alpha};
use tring::sampling::{lambda0, observe, sample_uniform, NoiseFamily, NoiseModel};
use tring::solve::{fantrc_rank_warning, fantrc_solve, ntrc_solve, SolveOutcome, SolveReport};
use tring::tensor::{default_s, DenseTensor, UnfoldingSpec};
use tring::{ObservationSet, SolverConfig, SolverKind};

pub fn synth(args: SynthArgs) -> Result<()> {
    let order = args.dims.len();
    let ranks: Vec<usize> = if args.rank.len() == 1 {
        vec![args.rank[0]; order]
    } else if args.rank.len() == order {
        args.rank.clone()
    } else {
        bail!("--rank needs 1 or {order} values, got {}", args.rank.len());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut truth = random_tr(&mut rng, &args.dims, &ranks)?.reconstruct()?;
    if args.normalize {
        let norm = truth.fro_norm();
        if norm == 0.0 {
            bail!("generated tensor is identically zero");
        }
        truth.data_mut().iter_mut().for_each(|v| *v /= norm);
    }
    let numel = truth.numel();
    let n = match (args.samples, args.sr) {
        (Some(n), _) => n,
        (None, Some(p)) => {
            if !(p > 0.0 && p <= 1.0) {
                bail!("--sr must lie in (0, 1], got {p}");
            }
            (((p * numel as f64).round() as usize).max(1)).min(numel)
        }
        (None, None) => bail!("pass --sr or --samples"),
    };
    let noise = match args.noise.as_str() {
        "gaussian" => match args.sigma {
            Some(s) => NoiseModel::new(NoiseFamily::Gaussian, s)?,
            None => NoiseModel::gaussian_level(args.c, &truth)?,
        },
        "uniform" => NoiseModel::new(NoiseFamily::Uniform, args.sigma.unwrap_or(1.0))?,
        "poisson" => NoiseModel::new(
            NoiseFamily::Poisson { rate: args.poisson_rate },
            args.sigma.unwrap_or(1.0),
        )?,
        other => bail!("unknown noise family {other:?}"),
    };
    let linear = sample_uniform(&mut rng, &args.dims, n, args.with_replacement)?;
    let obs = observe(&truth, &linear, &noise, &mut rng)?;
    write_tensor_file(&args.tensor, &truth)
        .with_context(|| format!("writing {}", args.tensor.display()))?;
    write_observations_file(&args.observations, &obs)
        .with_context(|| format!("writing {}", args.observations.display()))?;
    println!("dims = {:?}", args.dims);
    println!("ranks = {ranks:?}");
    println!("samples = {n} ({:.4} of {numel})", n as f64 / numel as f64);
    println!("noise_std = {}", noise.noise_std());
    println!("wrote tensor to {}", args.tensor.display());
    println!("wrote observations to {}", args.observations.display());
    Ok(())
}

struct Resolved {
    kind: SolverKind,
    cfg: SolverConfig,
    cores: Option<Vec<usize>>,
    rank_warning: Option<String>,
}

/// Applies the flag > config file > default precedence and derives
/// lambda from the observations when it is not pinned down.
fn resolve_solver(
    args: &SolverArgs,
    obs: &ObservationSet,
    default_delta: f64,
    fallback_cores: Option<Vec<usize>>,
) -> Result<Resolved> {
    let file = FileConfig::load(args.config.as_deref())?;
    let kind = args.solver.or(file.solver).unwrap_or(SolverKind::Ntrc);
    let order = obs.dims().len();
    let s = args.s.or(file.s);
    let lambda = match args.lambda.or(file.lambda) {
        Some(l) => l,
        None => {
            let sigma = match args.sigma.or(file.sigma) {
                Some(s) => s,
                None => {
                    // RMS of the observed values stands in for
                    // ||T||_F / sqrt(D) under uniform sampling.
                    let c = args.c.or(file.c).unwrap_or(0.01);
                    let ynorm = obs.values().iter().map(|v| v * v).sum::<f64>().sqrt();
                    c * ynorm / (obs.len().max(1) as f64).sqrt()
                }
            };
            let scale = args.lambda_scale.or(file.lambda_scale).unwrap_or(1.0);
            let base = lambda0(sigma, obs.len(), obs.dims(), s.unwrap_or_else(|| default_s(order)))?;
            let lambda = scale * base;
            if lambda <= 0.0 {
                bail!("derived lambda is zero (noiseless data?); pass --lambda explicitly");
            }
            lambda
        }
    };
    let delta = args.delta.or(file.delta).unwrap_or(default_delta);
    let mut cfg = SolverConfig::new(lambda, delta)?;
    cfg.alpha = args.alpha.clone().or(file.alpha);
    cfg.s = s;
    if let Some(v) = args.max_iter.or(file.max_iter) {
        cfg.max_iter = v;
    }
    if let Some(v) = args.tol.or(file.tol) {
        cfg.tol = v;
    }
    if let Some(v) = args.penalty0.or(file.penalty0) {
        cfg.penalty0 = v;
    }
    if let Some(v) = args.growth.or(file.growth) {
        cfg.growth = v;
    }
    if let Some(v) = args.penalty_max.or(file.penalty_max) {
        cfg.penalty_max = v;
    }
    cfg.resolve(order)?;
    // A single value stands for all modes, as in synth --rank.
    let broadcast = |ranks: Option<Vec<usize>>| -> Option<Vec<usize>> {
        ranks.map(|r| if r.len() == 1 { vec![r[0]; order] } else { r })
    };
    let mut rank_warning = None;
    let cores = match kind {
        SolverKind::Ntrc => None,
        SolverKind::Fantrc => {
            let explicit = broadcast(args.fantrc_ranks.clone().or(file.fantrc_ranks));
            let ring = broadcast(args.ranks.clone().or(file.ranks));
            let cores = match (explicit, ring) {
                (Some(cores), maybe_ring) => {
                    if let Some(r) = maybe_ring {
                        if let Some(msg) = fantrc_rank_warning(&r, &cores) {
                            eprintln!("warning: {msg}");
                            rank_warning = Some(msg);
                        }
                    }
                    cores
                }
                (None, Some(r)) => {
                    let h = args.headroom.or(file.headroom).unwrap_or(1.2);
                    suggested_tucker_ranks(obs.dims(), &r, h)?
                }
                (None, None) => match fallback_cores {
                    Some(c) => c,
                    None => bail!("the factored solver needs --fantrc-ranks or --ranks"),
                },
            };
            Some(cores)
        }
    };
    Ok(Resolved { kind, cfg, cores, rank_warning })
}

fn run_resolved(
    resolved: &Resolved,
    obs: &ObservationSet,
    truth: Option<&DenseTensor>,
) -> Result<SolveOutcome> {
    let mut outcome = match resolved.kind {
        SolverKind::Ntrc => ntrc_solve(obs, &resolved.cfg, truth)?,
        SolverKind::Fantrc => fantrc_solve(
            obs,
            resolved.cores.as_deref().expect("cores resolved for fantrc"),
            &resolved.cfg,
            truth,
        )?,
    };
    if let Some(msg) = &resolved.rank_warning {
        outcome.report.warnings.push(msg.clone());
    }
    Ok(outcome)
}

#[derive(Serialize)]
struct RunReport<'a> {
    solver: SolverKind,
    lambda: f64,
    delta: f64,
    core_extents: Option<&'a [usize]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psnr: Option<f64>,
    report: &'a SolveReport,
}

fn write_report(path: &Path, report: &RunReport<'_>) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn complete(args: CompleteArgs) -> Result<()> {
    let obs = read_observations_file(&args.observations)
        .with_context(|| format!("reading {}", args.observations.display()))?;
    let truth = match &args.truth {
        Some(p) => Some(read_tensor_file(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let default_delta = match obs.max_abs_value() {
        v if v > 0.0 => 10.0 * v,
        _ => 1.0,
    };
    let resolved = resolve_solver(&args.solver, &obs, default_delta, None)?;
    let outcome = run_resolved(&resolved, &obs, truth.as_ref())?;

    println!("solver = {}", resolved.kind);
    println!("lambda = {}", resolved.cfg.lambda);
    println!("delta = {}", resolved.cfg.delta);
    if let Some(cores) = &resolved.cores {
        println!("core_extents = {cores:?}");
    }
    println!("iterations = {}", outcome.report.iterations);
    println!("converged = {}", outcome.report.converged);
    if let Some(re) = outcome.report.relative_error {
        println!("re = {re}");
    }
    if let Some(path) = &args.output {
        write_tensor_file(path, &outcome.estimate)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote estimate to {}", path.display());
    }
    if let Some(path) = &args.report {
        write_report(
            path,
            &RunReport {
                solver: resolved.kind,
                lambda: resolved.cfg.lambda,
                delta: resolved.cfg.delta,
                core_extents: resolved.cores.as_deref(),
                psnr: None,
                report: &outcome.report,
            },
        )?;
        println!("wrote report to {}", path.display());
    }
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let mut spec = if args.full {
        ExperimentSpec::full(args.protocol)
    } else {
        ExperimentSpec::desk(args.protocol)
    };
    if let Some(v) = args.trials {
        spec.trials = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.solver {
        spec.solver = v;
    }
    if let Some(v) = args.sides {
        spec.sides = v;
    }
    if let Some(v) = args.order {
        spec.order = v;
    }
    if let Some(v) = args.ranks {
        spec.ranks = v;
    }
    if let Some(v) = args.sr {
        spec.sampling_ratios = v;
    }
    if let Some(v) = args.targets {
        spec.sample_targets = v;
    }
    if let Some(v) = args.noise_levels {
        spec.noise_levels = v;
    }
    if let Some(v) = args.headrooms {
        spec.headrooms = v;
    }
    if let Some(v) = args.multipliers {
        spec.lambda_multipliers = v;
    }
    if let Some(v) = args.max_iter {
        spec.max_iter = v;
    }
    if let Some(v) = args.tol {
        spec.tol = v;
    }
    let records = run_protocol(&spec)?;
    std::fs::write(&args.records, records_to_csv(&records))
        .with_context(|| format!("writing {}", args.records.display()))?;
    println!("wrote {} records to {}", records.len(), args.records.display());
    if let Some(path) = &args.summary {
        let summaries = summarize(&records);
        std::fs::write(path, summaries_to_csv(&summaries))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {} summaries to {}", summaries.len(), path.display());
    }
    let failures = records.iter().filter(|r| !r.note.is_empty()).count();
    if failures > 0 {
        eprintln!("warning: {failures} solves failed; see the note column");
    }
    Ok(())
}

pub fn inpaint(args: InpaintArgs) -> Result<()> {
    let image = read_ppm_file(&args.image)
        .with_context(|| format!("reading {}", args.image.display()))?;
    if args.blocks.len() != 2 {
        bail!("--blocks needs exactly two values h1,w1");
    }
    let truth = vdt_tensorize(&image, args.blocks[0], args.blocks[1])?;
    if !(args.sr > 0.0 && args.sr <= 1.0) {
        bail!("--sr must lie in (0, 1], got {}", args.sr);
    }
    let numel = truth.numel();
    let n = (((args.sr * numel as f64).round() as usize).max(1)).min(numel);
    let noise = NoiseModel::gaussian_level(args.noise_level, &truth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let linear = sample_uniform(&mut rng, truth.dims(), n, false)?;
    let obs = observe(&truth, &linear, &noise, &mut rng)?;

    // Entries live in [0, 1], so the natural bound is 1. The factored
    // default mirrors the empirical choice for 16x16x32x32x3 images.
    let fallback: Vec<usize> = [10, 10, 18, 18, 3]
        .iter()
        .zip(truth.dims())
        .map(|(&want, &d)| want.min(d))
        .collect();
    let resolved = resolve_solver(&args.solver, &obs, 1.0, Some(fallback))?;
    let outcome = run_resolved(&resolved, &obs, Some(&truth))?;
    let restored = vdt_detensorize(&outcome.estimate)?;
    let quality = psnr(&restored, &image, PsnrForm::Amplitude)?;

    println!("solver = {}", resolved.kind);
    println!("lambda = {}", resolved.cfg.lambda);
    println!("samples = {n} ({:.4} of {numel})", n as f64 / numel as f64);
    println!("noise_std = {}", noise.noise_std());
    println!("iterations = {}", outcome.report.iterations);
    println!("re = {}", outcome.report.relative_error.unwrap_or(f64::NAN));
    println!("psnr = {quality}");
    write_ppm_file(&args.output, &restored)
        .with_context(|| format!("writing {}", args.output.display()))?;
    println!("wrote completed image to {}", args.output.display());
    if let Some(path) = &args.degraded {
        let counts = obs.counts();
        let mut masked = obs.adjoint();
        for (m, &c) in masked.data_mut().iter_mut().zip(counts.data()) {
            if c > 0.0 {
                *m /= c;
            }
        }
        write_ppm_file(path, &vdt_detensorize(&masked)?)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote degraded image to {}", path.display());
    }
    if let Some(path) = &args.report {
        write_report(
            path,
            &RunReport {
                solver: resolved.kind,
                lambda: resolved.cfg.lambda,
                delta: resolved.cfg.delta,
                core_extents: resolved.cores.as_deref(),
                psnr: Some(quality),
                report: &outcome.report,
            },
        )?;
        println!("wrote report to {}", path.display());
    }
    Ok(())
}

pub fn inspect(args: InspectArgs) -> Result<()> {
    let t = read_tensor_file(&args.tensor)
        .with_context(|| format!("reading {}", args.tensor.display()))?;
    let order = t.order();
    let s = args.s.unwrap_or_else(|| default_s(order));
    let alpha = args.alpha.clone().unwrap_or_else(|| uniform_alpha(order));
    println!("dims = {:?}", t.dims());
    println!("entries = {}", t.numel());
    println!("fro_norm = {}", t.fro_norm());
    println!("inf_norm = {}", t.inf_norm());
    println!("s = {s}");
    for mode in 1..=order {
        let spec = UnfoldingSpec::circular(t.dims(), mode, s)?;
        let m = spec.unfold(&t)?;
        println!(
            "unfolding {mode}: {} x {}, rank = {}, nuclear = {}, spectral = {}",
            spec.d1(),
            spec.d2(),
            numerical_rank(&m)?,
            nuclear_norm(&m)?,
            spectral_norm(&m)?,
        );
    }
    println!("trnn = {}", trnn(&t, s, &alpha)?);
    println!("trnn_dual_upper = {}", trnn_dual_upper(&t, s, &alpha)?);
    Ok(())
}
