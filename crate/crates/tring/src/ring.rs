//! Tensor-ring and Tucker representations.
//!
//! A tensor ring stores an order-K tensor as K third-order cores
//! `G^(k)` of extents `r_k x d_k x r_{k+1}` with `r_{K+1} = r_1`;
//! entrywise,
//!
//! ```text
//!   T(i_1, ..., i_K) = sum over (v_1, ..., v_K) of
//!                      prod_k G^(k)(v_k, i_k, v_{k+1})
//! ```
//!
//! with the last bond wrapping around to `v_1`. [`tr_to_tucker`]
//! compresses each mode through the skinny SVD of the core's mode-2
//! unfolding, yielding an equivalent Tucker form whose factor matrices
//! have orthonormal columns; the ring nuclear norm is invariant under
//! that compression, which is what makes the factored solver cheap.

use crate::error::{Error, Result};
use crate::linalg::{nuclear_norm, numerical_rank, spectral_norm, thin_svd};
use crate::tensor::{canonical_fold, canonical_unfold, mode_k_product, DenseTensor, UnfoldingSpec};
use ndarray::prelude::*;
use ndarray::ShapeBuilder;

/// Tensor-ring format: K cores of extents `r_k x d_k x r_{k+1}`, cyclic.
#[derive(Debug, Clone)]
pub struct TrFormat {
    cores: Vec<DenseTensor>,
}

impl TrFormat {
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.len() < 2 {
            return Err(Error::shape("a tensor ring needs at least 2 cores"));
        }
        for core in &cores {
            if core.order() != 3 {
                return Err(Error::shape(format!(
                    "ring cores must be order 3, got extents {:?}",
                    core.dims()
                )));
            }
        }
        for k in 0..cores.len() {
            let right = cores[k].dims()[2];
            let next_left = cores[(k + 1) % cores.len()].dims()[0];
            if right != next_left {
                return Err(Error::shape(format!(
                    "bond mismatch between cores {} and {}: {right} vs {next_left}",
                    k + 1,
                    (k + 1) % cores.len() + 1
                )));
            }
        }
        Ok(TrFormat { cores })
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// Bond ranks `r_1, ..., r_K` (`r_k` is the left bond of core k).
    pub fn ranks(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[0]).collect()
    }

    /// Dense tensor via sequential core contraction: the running matrix
    /// keeps `r_1` and the merged free modes on the rows and the current
    /// bond on the columns, and the final bond traces back onto `r_1`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let dims = self.dims();
        let r1 = self.cores[0].dims()[0];
        let mut rows = r1 * dims[0];
        let mut buf = self.cores[0].data().to_vec();
        for core in &self.cores[1..] {
            let (rk, dk, rk1) = (core.dims()[0], core.dims()[1], core.dims()[2]);
            let a = ArrayView2::from_shape((rows, rk).f(), &buf)
                .map_err(|e| Error::shape(e.to_string()))?;
            let b = ArrayView2::from_shape((rk, dk * rk1).f(), core.data())
                .map_err(|e| Error::shape(e.to_string()))?;
            let prod = a.dot(&b);
            let mut next = Vec::with_capacity(rows * dk * rk1);
            for j in 0..prod.ncols() {
                for i in 0..prod.nrows() {
                    next.push(prod[[i, j]]);
                }
            }
            buf = next;
            rows *= dk;
        }
        // buf is (r1 * D) x r1 column-major; trace out the ring bond.
        let numel: usize = dims.iter().product();
        debug_assert_eq!(rows, r1 * numel);
        let mut data = Vec::with_capacity(numel);
        for i in 0..numel {
            let mut acc = 0.0;
            for u in 0..r1 {
                acc += buf[(u + r1 * i) + u * rows];
            }
            data.push(acc);
        }
        DenseTensor::new(dims, data)
    }

    /// Single entry by direct summation over all bond index tuples.
    /// Exponential in K; intended as an independent cross-check.
    pub fn entry_by_summation(&self, idx: &[usize]) -> Result<f64> {
        let k = self.order();
        if idx.len() != k {
            return Err(Error::shape(format!(
                "index length {} != ring order {k}",
                idx.len()
            )));
        }
        let ranks = self.ranks();
        let mut bonds = vec![1usize; k];
        let mut total = 0.0;
        loop {
            let mut prod = 1.0;
            for (m, core) in self.cores.iter().enumerate() {
                let left = bonds[m];
                let right = bonds[(m + 1) % k];
                prod *= core.get(&[left, idx[m], right]);
            }
            total += prod;
            let mut m = 0;
            loop {
                if m == k {
                    return Ok(total);
                }
                bonds[m] += 1;
                if bonds[m] <= ranks[m] {
                    break;
                }
                bonds[m] = 1;
                m += 1;
            }
        }
    }
}

/// Ring with independent `U[0, 1)` core entries.
pub fn random_tr<R: rand::Rng>(rng: &mut R, dims: &[usize], ranks: &[usize]) -> Result<TrFormat> {
    if dims.len() != ranks.len() {
        return Err(Error::shape(format!(
            "dims and ranks lengths differ: {} vs {}",
            dims.len(),
            ranks.len()
        )));
    }
    if ranks.iter().any(|&r| r == 0) {
        return Err(Error::invalid("ring ranks must be >= 1"));
    }
    let k = dims.len();
    let mut cores = Vec::with_capacity(k);
    for m in 0..k {
        let shape = [ranks[m], dims[m], ranks[(m + 1) % k]];
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        cores.push(DenseTensor::new(shape.to_vec(), data)?);
    }
    TrFormat::new(cores)
}

/// Tucker format: a core tensor and one factor matrix per mode, where
/// factor k has extents `d_k x R_k` and the core has extents
/// `R_1 x ... x R_K`.
#[derive(Debug, Clone)]
pub struct TuckerFormat {
    pub core: DenseTensor,
    pub factors: Vec<Array2<f64>>,
}

impl TuckerFormat {
    pub fn new(core: DenseTensor, factors: Vec<Array2<f64>>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::shape(format!(
                "{} factors for an order-{} core",
                factors.len(),
                core.order()
            )));
        }
        for (m, f) in factors.iter().enumerate() {
            if f.ncols() != core.dims()[m] {
                return Err(Error::shape(format!(
                    "factor {} is {:?} but core mode extent is {}",
                    m + 1,
                    f.dim(),
                    core.dims()[m]
                )));
            }
        }
        Ok(TuckerFormat { core, factors })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.dims().to_vec()
    }

    /// Dense tensor `core x_1 U_1 x_2 ... x_K U_K`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let mut t = self.core.clone();
        for (m, f) in self.factors.iter().enumerate() {
            t = mode_k_product(&t, f, m + 1)?;
        }
        Ok(t)
    }
}

/// Compresses a ring into an equivalent Tucker form.
///
/// Per mode: when `d_k > r_k * r_{k+1}` the core's mode-2 unfolding
/// `d_k x (r_k r_{k+1})` is factored by a skinny SVD `U S V^T`; the factor
/// is `U` and the new ring core is `fold_2(S V^T)` with mode extent
/// `R_k = r_k r_{k+1}`. Otherwise the factor is the identity and
/// `R_k = d_k`. The compressed ring reconstructs the Tucker core.
pub fn tr_to_tucker(tr: &TrFormat) -> Result<TuckerFormat> {
    let mut factors = Vec::with_capacity(tr.order());
    let mut cores = Vec::with_capacity(tr.order());
    for core in tr.cores() {
        let (rk, dk, rk1) = (core.dims()[0], core.dims()[1], core.dims()[2]);
        let bond2 = rk * rk1;
        if dk > bond2 {
            let unfolded = canonical_unfold(core, 2)?;
            let svd = thin_svd(&unfolded)?;
            let mut sv = svd.vt.clone();
            for (j, &s) in svd.s.iter().enumerate() {
                sv.row_mut(j).mapv_inplace(|v| v * s);
            }
            cores.push(canonical_fold(&sv, 2, &[rk, bond2, rk1])?);
            factors.push(svd.u);
        } else {
            cores.push(core.clone());
            factors.push(Array2::eye(dk));
        }
    }
    TuckerFormat::new(TrFormat::new(cores)?.reconstruct()?, factors)
}

/// `R_k` floor below which a Tucker compression can lose ring content:
/// `r_k * r_{k+1}` per mode.
pub fn tucker_rank_floor(ranks: &[usize]) -> Vec<usize> {
    let k = ranks.len();
    (0..k).map(|m| ranks[m] * ranks[(m + 1) % k]).collect()
}

/// Tucker ranks for the factored solver when the ring rank is known:
/// `min(round(headroom * r_k * r_{k+1}), d_k)` per mode.
pub fn suggested_tucker_ranks(dims: &[usize], ranks: &[usize], headroom: f64) -> Result<Vec<usize>> {
    if dims.len() != ranks.len() {
        return Err(Error::shape("dims and ranks lengths differ"));
    }
    if headroom <= 0.0 {
        return Err(Error::invalid("headroom must be positive"));
    }
    Ok(tucker_rank_floor(ranks)
        .iter()
        .zip(dims)
        .map(|(&floor, &d)| (((headroom * floor as f64).round() as usize).max(1)).min(d))
        .collect())
}

/// Uniform unfolding weights `1/K`.
pub fn uniform_alpha(order: usize) -> Vec<f64> {
    vec![1.0 / order as f64; order]
}

fn check_alpha(alpha: &[f64], order: usize) -> Result<()> {
    if alpha.len() != order {
        return Err(Error::shape(format!(
            "{} weights for an order-{order} tensor",
            alpha.len()
        )));
    }
    if alpha.iter().any(|&a| !a.is_finite() || a <= 0.0) {
        return Err(Error::invalid("unfolding weights must be positive and finite"));
    }
    Ok(())
}

/// Ring nuclear norm: `sum_k alpha_k * || T_(k,s) ||_*` over the circular
/// unfoldings.
pub fn trnn(t: &DenseTensor, s: usize, alpha: &[f64]) -> Result<f64> {
    check_alpha(alpha, t.order())?;
    let mut total = 0.0;
    for mode in 1..=t.order() {
        let m = UnfoldingSpec::circular(t.dims(), mode, s)?.unfold(t)?;
        total += alpha[mode - 1] * nuclear_norm(&m)?;
    }
    Ok(total)
}

/// Upper bound on the dual of the ring nuclear norm from the best
/// single-mode split: `min_k alpha_k^{-1} * || T_(k,s) ||`.
pub fn trnn_dual_upper(t: &DenseTensor, s: usize, alpha: &[f64]) -> Result<f64> {
    check_alpha(alpha, t.order())?;
    let mut best = f64::INFINITY;
    for mode in 1..=t.order() {
        let m = UnfoldingSpec::circular(t.dims(), mode, s)?.unfold(t)?;
        best = best.min(spectral_norm(&m)? / alpha[mode - 1]);
    }
    Ok(best)
}

/// Relation between a mode extent and the bond-rank product around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrState {
    /// `d_k > r_k * r_{k+1}`: the mode-2 core unfolding is rank deficient
    /// in its rows and the mode can be compressed.
    Subcritical,
    /// `d_k = r_k * r_{k+1}`.
    Critical,
    /// `d_k < r_k * r_{k+1}`: canonical mode-k unfoldings are generically
    /// full rank.
    Supercritical,
}

/// Per-mode state classification of a ring with the given extents/ranks.
pub fn classify_state(dims: &[usize], ranks: &[usize]) -> Result<Vec<TrState>> {
    if dims.len() != ranks.len() {
        return Err(Error::shape("dims and ranks lengths differ"));
    }
    Ok(tucker_rank_floor(ranks)
        .iter()
        .zip(dims)
        .map(|(&bond, &d)| match d.cmp(&bond) {
            std::cmp::Ordering::Greater => TrState::Subcritical,
            std::cmp::Ordering::Equal => TrState::Critical,
            std::cmp::Ordering::Less => TrState::Supercritical,
        })
        .collect())
}

/// Numerical rank of the circular mode-`(k, s)` unfolding.
pub fn unfolding_rank(t: &DenseTensor, mode: usize, s: usize) -> Result<usize> {
    let m = UnfoldingSpec::circular(t.dims(), mode, s)?.unfold(t)?;
    numerical_rank(&m)
}

/// Rank cap of the circular mode-`(k, s)` unfolding of a ring tensor:
/// the product of the two bond ranks the unfolding cuts.
pub fn circular_rank_bound(ranks: &[usize], mode: usize, s: usize) -> usize {
    let k = ranks.len();
    ranks[mode - 1] * ranks[(mode - 1 + s) % k]
}
