//! ADMM solvers for the entrywise-observed ring nuclear norm model
//!
//! ```text
//!   min over T   1/2 * ||y - X(T)||^2 + lambda * sum_k alpha_k ||T_(k,s)||_*
//!   subject to   ||T||_inf <= delta
//! ```
//!
//! [`ntrc_solve`] splits one auxiliary tensor per unfolding and applies
//! singular value thresholding at full size. [`fantrc_solve`] instead
//! couples the data term to a small Tucker core through orthonormal
//! factors, thresholding core-sized unfoldings; it needs the per-mode
//! core extents up front (see [`crate::ring::suggested_tucker_ranks`]).

mod fantrc;
mod ntrc;

pub use fantrc::{fantrc_estimate_update, fantrc_rank_warning, fantrc_solve};
pub use ntrc::{ntrc_estimate_update, ntrc_solve};

use crate::error::{Error, Result};
use crate::ring::uniform_alpha;
use crate::tensor::default_s;
use serde::{Deserialize, Serialize};

/// Which ADMM variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Ntrc,
    Fantrc,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Ntrc => "ntrc",
            SolverKind::Fantrc => "fantrc",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ntrc" => Ok(SolverKind::Ntrc),
            "fantrc" => Ok(SolverKind::Fantrc),
            other => Err(Error::invalid(format!("unknown solver '{other}'"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Common solver knobs. `alpha` and `s` stay `None` for the defaults
/// (uniform `1/K` weights, `s = ceil(K/2)`); everything order-dependent
/// is checked when a solver resolves the config against actual extents.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub delta: f64,
    pub alpha: Option<Vec<f64>>,
    pub s: Option<usize>,
    pub penalty0: f64,
    pub growth: f64,
    pub penalty_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub track_objective: bool,
}

impl SolverConfig {
    pub fn new(lambda: f64, delta: f64) -> Result<Self> {
        let cfg = SolverConfig {
            lambda,
            delta,
            alpha: None,
            s: None,
            penalty0: 1e-4,
            growth: 1.1,
            penalty_max: 1e10,
            tol: 1e-6,
            max_iter: 500,
            track_objective: true,
        };
        cfg.check_scalars()?;
        Ok(cfg)
    }

    fn check_scalars(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("delta", self.delta),
            ("penalty0", self.penalty0),
            ("penalty_max", self.penalty_max),
            ("tol", self.tol),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !self.growth.is_finite() || self.growth <= 1.0 {
            return Err(Error::invalid(format!("growth must be > 1, got {}", self.growth)));
        }
        if self.penalty_max < self.penalty0 {
            return Err(Error::invalid("penalty_max must be >= penalty0"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        Ok(())
    }

    /// Validates against a concrete order and fills in defaulted fields.
    pub fn resolve(&self, order: usize) -> Result<(Vec<f64>, usize)> {
        self.check_scalars()?;
        let s = self.s.unwrap_or_else(|| default_s(order));
        if order < 2 {
            return Err(Error::invalid("solvers need tensors of order >= 2"));
        }
        if s < 1 || s > order - 1 {
            return Err(Error::invalid(format!("s = {s} out of range 1..={}", order - 1)));
        }
        let alpha = match &self.alpha {
            None => uniform_alpha(order),
            Some(a) => {
                if a.len() != order {
                    return Err(Error::invalid(format!(
                        "{} weights for an order-{order} tensor",
                        a.len()
                    )));
                }
                if a.iter().any(|&v| !v.is_finite() || v <= 0.0) {
                    return Err(Error::invalid("weights must be positive and finite"));
                }
                let sum: f64 = a.iter().sum();
                if (sum - 1.0).abs() > 1e-10 {
                    return Err(Error::invalid(format!("weights must sum to 1, got {sum}")));
                }
                a.clone()
            }
        };
        Ok((alpha, s))
    }
}

/// Per-run diagnostics. Histories are indexed by iteration (starting at
/// the first); the residual vectors stay empty for the full-size solver.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub solver: SolverKind,
    pub iterations: usize,
    pub converged: bool,
    pub final_penalty: f64,
    pub wall_time_s: f64,
    pub relative_error: Option<f64>,
    pub objective: Vec<f64>,
    pub rel_change: Vec<f64>,
    pub residual_recon: Vec<f64>,
    pub residual_core: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Estimate plus diagnostics.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub estimate: crate::tensor::DenseTensor,
    pub report: SolveReport,
}

pub(crate) fn relative_change(new: &[f64], old: &[f64], old_norm: f64) -> f64 {
    let diff = new
        .iter()
        .zip(old)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if old_norm > 0.0 {
        diff / old_norm
    } else if diff > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}
