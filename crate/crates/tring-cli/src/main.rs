//! Command-line front end: synthetic data generation, completion runs,
//! benchmark protocols, image inpainting, and tensor inspection.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a
//! solve fails numerically.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use tring::experiments::Protocol;
use tring::solve::SolverKind;

#[derive(Parser)]
#[command(name = "tring", version, about = "Noisy tensor completion via tensor-ring nuclear norm minimization")]
struct Cli {
    /// BLAS thread count (exported before the first kernel call)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random tensor-ring tensor and noisy observations
    Synth(SynthArgs),
    /// Complete a tensor from an observation file
    Complete(CompleteArgs),
    /// Run a benchmark protocol and emit CSV records
    Bench(BenchArgs),
    /// Mask and complete a PPM image through block tensorization
    Inpaint(InpaintArgs),
    /// Print shape, norms, unfolding ranks, and nuclear norms
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Tensor extents, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// Ring ranks: one value per mode, or a single value for all
    #[arg(long, value_delimiter = ',', required = true)]
    rank: Vec<usize>,
    /// Fraction of entries to observe
    #[arg(long, conflicts_with = "samples")]
    sr: Option<f64>,
    /// Number of entries to observe
    #[arg(long)]
    samples: Option<usize>,
    /// Noise family: gaussian, uniform, or poisson
    #[arg(long, default_value = "gaussian")]
    noise: String,
    /// Gaussian level: sigma = c * ||T||_F / sqrt(D)
    #[arg(long, default_value_t = 0.01)]
    c: f64,
    /// Explicit noise scale, overriding --c
    #[arg(long)]
    sigma: Option<f64>,
    /// Poisson rate
    #[arg(long, default_value_t = 0.01)]
    poisson_rate: f64,
    /// Scale the tensor to unit Frobenius norm before observing
    #[arg(long)]
    normalize: bool,
    /// Sample entries with replacement
    #[arg(long)]
    with_replacement: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the ground truth tensor
    #[arg(long, default_value = "truth.rten")]
    tensor: PathBuf,
    /// Where to write the observations
    #[arg(long, default_value = "obs.robs")]
    observations: PathBuf,
}

/// Solver knobs shared by `complete` and `inpaint`. Every value can
/// also come from `--config`; a flag wins over the file, the file wins
/// over the built-in default.
#[derive(Args, Clone)]
struct SolverArgs {
    /// TOML file with any of these keys as defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// ntrc (full tensor) or fantrc (factored core)
    #[arg(long, value_parser = SolverKind::from_str)]
    solver: Option<SolverKind>,
    /// Regularization weight; derived from sigma when absent
    #[arg(long)]
    lambda: Option<f64>,
    /// Noise std used to derive lambda
    #[arg(long)]
    sigma: Option<f64>,
    /// Estimate sigma as c * ||y||_2 / sqrt(N) when it is not given
    #[arg(long)]
    c: Option<f64>,
    /// Multiplier applied to the derived lambda
    #[arg(long)]
    lambda_scale: Option<f64>,
    /// Entrywise bound on the estimate
    #[arg(long)]
    delta: Option<f64>,
    /// Unfolding weights, comma separated (default uniform)
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Circular unfolding width (default ceil(order / 2))
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Initial ADMM penalty
    #[arg(long)]
    penalty0: Option<f64>,
    /// Per-iteration penalty growth factor
    #[arg(long)]
    growth: Option<f64>,
    #[arg(long)]
    penalty_max: Option<f64>,
    /// Factored-solver core extents, one per mode
    #[arg(long, value_delimiter = ',')]
    fantrc_ranks: Option<Vec<usize>>,
    /// Ring ranks from which core extents are derived
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// Core extent headroom over r_k * r_{k+1}
    #[arg(long)]
    headroom: Option<f64>,
}

#[derive(Args)]
struct CompleteArgs {
    /// Observation file produced by synth (or any ROBS1 file)
    #[arg(long, required = true)]
    observations: PathBuf,
    /// Ground truth tensor for error reporting
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Where to write the completed tensor
    #[arg(long)]
    output: Option<PathBuf>,
    /// Where to write the run report as JSON
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// sharpness, rank_scaling, noise_families, multistate,
    /// factor_rank_sweep, or custom
    #[arg(value_parser = Protocol::from_str)]
    protocol: Protocol,
    /// Use the published grids instead of the quick desk grids
    #[arg(long)]
    full: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = SolverKind::from_str)]
    solver: Option<SolverKind>,
    /// Cubical tensor sides, comma separated
    #[arg(long, value_delimiter = ',')]
    sides: Option<Vec<usize>>,
    #[arg(long)]
    order: Option<usize>,
    /// Uniform ring ranks
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// Sampling ratios in (0, 1]
    #[arg(long, value_delimiter = ',')]
    sr: Option<Vec<f64>>,
    /// Rescaled observation targets (sharpness protocol)
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<f64>>,
    /// Gaussian noise levels c
    #[arg(long, value_delimiter = ',')]
    noise_levels: Option<Vec<f64>>,
    /// Core extent headrooms (factored sweep)
    #[arg(long, value_delimiter = ',')]
    headrooms: Option<Vec<f64>>,
    /// Candidate lambda multipliers
    #[arg(long, value_delimiter = ',')]
    multipliers: Option<Vec<f64>>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Where to write per-trial records
    #[arg(long, default_value = "records.csv")]
    records: PathBuf,
    /// Where to write per-cell means
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct InpaintArgs {
    /// Source image (binary 8-bit PPM)
    #[arg(long, required = true)]
    image: PathBuf,
    /// Fraction of pixels kept
    #[arg(long, default_value_t = 0.4)]
    sr: f64,
    /// Gaussian level of the injected noise
    #[arg(long, default_value_t = 0.25)]
    noise_level: f64,
    /// Within-block extents h1,w1 of the tensorization
    #[arg(long, value_delimiter = ',', default_values_t = [16, 16])]
    blocks: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the completed image
    #[arg(long, required = true)]
    output: PathBuf,
    /// Also write the masked noisy input for side-by-side viewing
    #[arg(long)]
    degraded: Option<PathBuf>,
    /// Where to write the run report as JSON
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct InspectArgs {
    /// Tensor file to describe
    tensor: PathBuf,
    /// Circular unfolding width (default ceil(order / 2))
    #[arg(long)]
    s: Option<usize>,
    /// Unfolding weights (default uniform)
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Covers --help/--version too, which should exit cleanly.
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = cli.threads {
        // OpenBLAS reads these once, at first kernel call.
        std::env::set_var("OPENBLAS_NUM_THREADS", n.to_string());
        std::env::set_var("OMP_NUM_THREADS", n.to_string());
    }
    let result = match cli.command {
        Command::Synth(args) => commands::synth(args),
        Command::Complete(args) => commands::complete(args),
        Command::Bench(args) => commands::bench(args),
        Command::Inpaint(args) => commands::inpaint(args),
        Command::Inspect(args) => commands::inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<tring::Error>(), Some(tring::Error::Numerical(_))));
            ExitCode::from(if numerical { 2 } else { 1 })
        }
    }
}
