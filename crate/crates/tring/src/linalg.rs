//! Thin SVD plumbing: singular value thresholding, nuclear/spectral
//! norms, orthogonal Procrustes, and numerical rank.
//!
//! All routines funnel through [`thin_svd`], which wraps the LAPACK
//! divide-and-conquer SVD and applies a deterministic sign convention
//! (the largest-magnitude entry of every left singular vector is made
//! nonnegative, ties to the lowest row index). Callers therefore see a
//! reproducible factorization even on degenerate inputs.

use crate::error::{Error, Result};
use ndarray::prelude::*;
use ndarray_linalg::{JobSvd, QR, SVDDC};

/// Relative cutoff for [`numerical_rank`]: singular values below
/// `RANK_REL_TOL * sigma_max` count as zero.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Thin singular value decomposition `a = u * diag(s) * vt` with
/// `min(m, n)` columns in `u` and rows in `vt`, `s` descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub vt: Array2<f64>,
}

impl SvdResult {
    /// Recomposes `u * diag(s) * vt`.
    pub fn recompose(&self) -> Array2<f64> {
        let mut us = self.u.clone();
        for (j, &sv) in self.s.iter().enumerate() {
            us.column_mut(j).mapv_inplace(|v| v * sv);
        }
        us.dot(&self.vt)
    }
}

pub fn thin_svd(a: &Array2<f64>) -> Result<SvdResult> {
    if a.is_empty() {
        return Err(Error::shape("SVD of an empty matrix"));
    }
    let (u, s, vt) = a
        .svddc(JobSvd::Some)
        .map_err(|e| Error::numerical(format!("SVD failed: {e}")))?;
    let mut u = u.ok_or_else(|| Error::numerical("SVD returned no left vectors"))?;
    let mut vt = vt.ok_or_else(|| Error::numerical("SVD returned no right vectors"))?;
    for j in 0..u.ncols() {
        let col = u.column(j);
        let mut pivot = 0usize;
        let mut best = -1.0;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                pivot = i;
            }
        }
        if u[[pivot, j]] < 0.0 {
            u.column_mut(j).mapv_inplace(|v| -v);
            vt.row_mut(j).mapv_inplace(|v| -v);
        }
    }
    Ok(SvdResult { u, s, vt })
}

/// Soft-thresholds the singular values of `a` by `tau`, returning the
/// thresholded matrix and its surviving singular values. This is the
/// proximal operator of `tau * || . ||_*`.
pub fn svt(a: &Array2<f64>, tau: f64) -> Result<(Array2<f64>, Array1<f64>)> {
    if tau < 0.0 {
        return Err(Error::invalid(format!("svt threshold must be >= 0, got {tau}")));
    }
    let SvdResult { u, s, vt } = thin_svd(a)?;
    let shrunk = s.mapv(|v| (v - tau).max(0.0));
    let rank = shrunk.iter().take_while(|&&v| v > 0.0).count();
    if rank == 0 {
        return Ok((Array2::zeros(a.dim()), shrunk));
    }
    let mut us = u.slice(s![.., ..rank]).to_owned();
    for (j, &sv) in shrunk.iter().take(rank).enumerate() {
        us.column_mut(j).mapv_inplace(|v| v * sv);
    }
    Ok((us.dot(&vt.slice(s![..rank, ..])), shrunk))
}

/// Sum of singular values.
pub fn nuclear_norm(a: &Array2<f64>) -> Result<f64> {
    Ok(thin_svd(a)?.s.sum())
}

/// Largest singular value.
pub fn spectral_norm(a: &Array2<f64>) -> Result<f64> {
    Ok(thin_svd(a)?.s[0])
}

/// Number of singular values above `RANK_REL_TOL * sigma_max`.
pub fn numerical_rank(a: &Array2<f64>) -> Result<usize> {
    let s = thin_svd(a)?.s;
    let cutoff = RANK_REL_TOL * s[0];
    if s[0] == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > cutoff).count())
}

/// Closest matrix with orthonormal columns to `m` in Frobenius norm,
/// equivalently the maximizer of `trace(U^T m)` over the Stiefel
/// manifold: `U = u * vt` from the thin SVD of `m`. Requires
/// `m.nrows() >= m.ncols()`.
pub fn procrustes(m: &Array2<f64>) -> Result<Array2<f64>> {
    let (rows, cols) = m.dim();
    if rows < cols {
        return Err(Error::shape(format!(
            "procrustes needs a tall matrix, got {rows}x{cols}"
        )));
    }
    let SvdResult { u, vt, .. } = thin_svd(m)?;
    Ok(u.dot(&vt))
}

/// Haar-distributed matrix with orthonormal columns (QR of a Gaussian
/// draw, R-diagonal signs fixed). Requires `rows >= cols`.
pub fn random_orthonormal<R: rand::Rng>(rng: &mut R, rows: usize, cols: usize) -> Result<Array2<f64>> {
    if rows < cols {
        return Err(Error::shape(format!(
            "orthonormal frame needs rows >= cols, got {rows}x{cols}"
        )));
    }
    let g = Array2::from_shape_fn((rows, cols), |_| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    let (mut q, r) = g
        .qr()
        .map_err(|e| Error::numerical(format!("QR failed: {e}")))?;
    for j in 0..cols {
        if r[[j, j]] < 0.0 {
            q.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    Ok(q)
}
