//! Optional TOML defaults for the solver flags.

use anyhow::{Context, Result};
use serde::Deserialize;
use std::path::Path;
use tring::solve::SolverKind;

/// Mirrors the solver flags; every key is optional. Unknown keys are
/// rejected so typos do not silently fall back to defaults.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub solver: Option<SolverKind>,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub c: Option<f64>,
    pub lambda_scale: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub s: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub penalty0: Option<f64>,
    pub growth: Option<f64>,
    pub penalty_max: Option<f64>,
    pub fantrc_ranks: Option<Vec<usize>>,
    pub ranks: Option<Vec<usize>>,
    pub headroom: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}
