//! Entrywise observation sampling and noise.
//!
//! Observations are inner products with standard basis tensors: drawing
//! index `n` yields `y_n = T(i_n) + sigma * xi_n`. The set keeps one slot
//! per draw, so an entry sampled twice contributes two (independently
//! noised) values; the adjoint accumulates them and [`ObservationSet::counts`]
//! exposes the per-entry multiplicities the solvers' diagonal systems need.

use crate::error::{Error, Result};
use crate::tensor::{min_dhat_mode, DenseTensor, UnfoldingSpec};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

/// Noise distributions for the entrywise observation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    /// Standard normal draws, scaled by `sigma`.
    Gaussian,
    /// `U[-0.5, 0.5)` draws, used exactly as drawn (not recentered or
    /// variance-normalized).
    Uniform,
    /// Poisson counts with the given rate, used exactly as drawn (the
    /// draw is nonnegative with mean `rate`).
    Poisson { rate: f64 },
}

impl NoiseFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Uniform => "uniform",
            NoiseFamily::Poisson { .. } => "poisson",
        }
    }

    /// Standard deviation of a single unscaled draw.
    pub fn unit_std(&self) -> f64 {
        match self {
            NoiseFamily::Gaussian => 1.0,
            NoiseFamily::Uniform => (1.0f64 / 12.0).sqrt(),
            NoiseFamily::Poisson { rate } => rate.sqrt(),
        }
    }
}

/// Additive noise `sigma * xi` with `xi` drawn from a [`NoiseFamily`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub family: NoiseFamily,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(family: NoiseFamily, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if let NoiseFamily::Poisson { rate } = family {
            if !rate.is_finite() || rate <= 0.0 {
                return Err(Error::invalid(format!("Poisson rate must be positive, got {rate}")));
            }
        }
        Ok(NoiseModel { family, sigma })
    }

    pub fn noiseless() -> Self {
        NoiseModel { family: NoiseFamily::Gaussian, sigma: 0.0 }
    }

    /// Gaussian noise at level `c`: `sigma = c * ||truth||_F / sqrt(D)`.
    pub fn gaussian_level(c: f64, truth: &DenseTensor) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::invalid(format!("noise level must be finite and >= 0, got {c}")));
        }
        let sigma = c * truth.fro_norm() / (truth.numel() as f64).sqrt();
        NoiseModel::new(NoiseFamily::Gaussian, sigma)
    }

    /// One noise value `sigma * xi`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let xi = match self.family {
            NoiseFamily::Gaussian => rng.sample::<f64, _>(StandardNormal),
            NoiseFamily::Uniform => rng.random_range(-0.5..0.5),
            NoiseFamily::Poisson { rate } => {
                Poisson::new(rate).expect("validated rate").sample(rng)
            }
        };
        self.sigma * xi
    }

    /// Standard deviation of the additive noise (`sigma` adjusted by the
    /// family's own spread).
    pub fn noise_std(&self) -> f64 {
        self.sigma * self.family.unit_std()
    }
}

/// Uniformly random entry positions as 1-based linear indices. Without
/// replacement requires `n <= numel`.
pub fn sample_uniform<R: Rng + ?Sized>(
    rng: &mut R,
    dims: &[usize],
    n: usize,
    with_replacement: bool,
) -> Result<Vec<usize>> {
    let numel = DenseTensor::zeros(dims)?.numel();
    if with_replacement {
        return Ok((0..n).map(|_| rng.random_range(0..numel) + 1).collect());
    }
    if n > numel {
        return Err(Error::invalid(format!(
            "cannot draw {n} distinct entries from {numel}"
        )));
    }
    Ok(rand::seq::index::sample(rng, numel, n)
        .into_iter()
        .map(|i| i + 1)
        .collect())
}

/// Noisy entrywise observations of `truth` at the given 1-based linear
/// indices, in order.
pub fn observe<R: Rng + ?Sized>(
    truth: &DenseTensor,
    linear: &[usize],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<ObservationSet> {
    let values = linear
        .iter()
        .map(|&idx| {
            if idx < 1 || idx > truth.numel() {
                return Err(Error::shape(format!(
                    "linear index {idx} out of range 1..={}",
                    truth.numel()
                )));
            }
            Ok(truth.data()[idx - 1] + noise.draw(rng))
        })
        .collect::<Result<Vec<f64>>>()?;
    ObservationSet::new(truth.dims().to_vec(), linear.to_vec(), values)
}

/// A batch of entrywise observations `(index, value)` of a tensor with
/// known extents. Duplicate indices are allowed and kept.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    dims: Vec<usize>,
    linear: Vec<usize>,
    values: Vec<f64>,
}

impl ObservationSet {
    /// `linear` holds 1-based column-major linear indices.
    pub fn new(dims: Vec<usize>, linear: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let numel = DenseTensor::zeros(&dims)?.numel();
        if linear.len() != values.len() {
            return Err(Error::shape(format!(
                "{} indices vs {} values",
                linear.len(),
                values.len()
            )));
        }
        for &idx in &linear {
            if idx < 1 || idx > numel {
                return Err(Error::shape(format!("linear index {idx} out of range 1..={numel}")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observation values must be finite"));
        }
        Ok(ObservationSet { dims, linear, values })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn numel(&self) -> usize {
        self.dims.iter().product()
    }

    /// Fraction of entries observed (duplicates counted once each draw).
    pub fn sample_ratio(&self) -> f64 {
        self.len() as f64 / self.numel() as f64
    }

    /// 1-based linear indices, in draw order.
    pub fn linear_indices(&self) -> &[usize] {
        &self.linear
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Applies the sampling operator: the tensor's entry at each
    /// observation index, in draw order.
    pub fn apply(&self, t: &DenseTensor) -> Result<Vec<f64>> {
        if t.dims() != self.dims.as_slice() {
            return Err(Error::shape(format!(
                "tensor extents {:?} do not match observation extents {:?}",
                t.dims(),
                self.dims
            )));
        }
        Ok(self.linear.iter().map(|&idx| t.data()[idx - 1]).collect())
    }

    /// Adjoint of the sampling operator applied to `y`: a dense tensor
    /// accumulating `y_n` into each observed position (duplicates sum).
    pub fn adjoint_of(&self, y: &[f64]) -> Result<DenseTensor> {
        if y.len() != self.len() {
            return Err(Error::shape(format!(
                "{} values for {} observations",
                y.len(),
                self.len()
            )));
        }
        let mut t = DenseTensor::zeros(&self.dims)?;
        for (&idx, &v) in self.linear.iter().zip(y) {
            t.data_mut()[idx - 1] += v;
        }
        Ok(t)
    }

    /// Adjoint applied to this set's own values.
    pub fn adjoint(&self) -> DenseTensor {
        self.adjoint_of(&self.values).expect("lengths match")
    }

    /// Per-entry sample multiplicities as a dense tensor.
    pub fn counts(&self) -> DenseTensor {
        let mut t = DenseTensor::zeros(&self.dims).expect("validated dims");
        for &idx in &self.linear {
            t.data_mut()[idx - 1] += 1.0;
        }
        t
    }

    /// Squared residual `0.5 * sum_n (y_n - T(i_n))^2`.
    pub fn half_squared_residual(&self, t: &DenseTensor) -> Result<f64> {
        let yhat = self.apply(t)?;
        Ok(0.5
            * self
                .values
                .iter()
                .zip(&yhat)
                .map(|(y, f)| (y - f) * (y - f))
                .sum::<f64>())
    }
}

/// Base regularization weight `sigma * sqrt(N * log(dtilde) / dhat)`
/// evaluated at the most compressible circular unfolding (smallest
/// `min(d1, d2)`).
pub fn lambda0(sigma: f64, n: usize, dims: &[usize], s: usize) -> Result<f64> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::invalid("lambda0 needs at least one observation"));
    }
    let mode = min_dhat_mode(dims, s)?;
    let spec = UnfoldingSpec::circular(dims, mode, s)?;
    Ok(sigma * (n as f64 * (spec.dtilde() as f64).ln() / spec.dhat() as f64).sqrt())
}

/// Multiplier grid customarily searched around [`lambda0`].
pub const LAMBDA_MULTIPLIERS: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];
