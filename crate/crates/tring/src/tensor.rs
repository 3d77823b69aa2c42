//! Dense column-major tensors and their matrix unfoldings.
//!
//! Storage follows the column-major convention throughout: the first index
//! varies fastest, so an order-K tensor with extents `d_1 x ... x d_K`
//! stores entry `(i_1, ..., i_K)` at linear offset
//! `(i_1 - 1) + (i_2 - 1) d_1 + ... + (i_K - 1) d_1 ... d_{K-1}`.
//! All public indices and mode numbers are 1-based; reshapes of
//! column-major data are free and `permute` matches the usual
//! `permute(T, order)` semantics of column-major numerical environments.

use crate::error::{Error, Result};
use ndarray::prelude::*;
use ndarray::ShapeBuilder;

/// Dense order-K tensor with `f64` entries in column-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Wraps `data` (column-major) as a tensor with the given extents.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n = checked_numel(&dims)?;
        if data.len() != n {
            return Err(Error::shape(format!(
                "data length {} does not match extents {:?} (numel {})",
                data.len(),
                dims,
                n
            )));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let n = checked_numel(dims)?;
        Ok(DenseTensor { dims: dims.to_vec(), data: vec![0.0; n] })
    }

    /// Builds a tensor by evaluating `f` at every 1-based multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n = checked_numel(dims)?;
        let mut idx = vec![1usize; dims.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for (i, d) in idx.iter_mut().zip(dims) {
                *i += 1;
                if *i <= *d {
                    break;
                }
                *i = 1;
            }
        }
        Ok(DenseTensor { dims: dims.to_vec(), data })
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Entry at a 1-based multi-index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[multi_index(idx, &self.dims).expect("index in range") - 1]
    }

    /// Sets the entry at a 1-based multi-index.
    pub fn set(&mut self, idx: &[usize], value: f64) {
        let off = multi_index(idx, &self.dims).expect("index in range") - 1;
        self.data[off] = value;
    }

    /// Reinterprets the same column-major data under new extents.
    pub fn reshape(&self, dims: &[usize]) -> Result<Self> {
        let n = checked_numel(dims)?;
        if n != self.data.len() {
            return Err(Error::shape(format!(
                "cannot reshape numel {} into {:?}",
                self.data.len(),
                dims
            )));
        }
        Ok(DenseTensor { dims: dims.to_vec(), data: self.data.clone() })
    }

    /// Reorders modes: `order` is a permutation of `1..=K` and mode `m` of
    /// the result is mode `order[m]` of `self`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let k = self.order();
        check_permutation(order, k)?;
        let odims: Vec<usize> = order.iter().map(|&m| self.dims[m - 1]).collect();
        // Output strides, then routed to input mode positions so a single
        // column-major sweep over the input lands each entry directly.
        let mut ostr = vec![1usize; k];
        for m in 1..k {
            ostr[m] = ostr[m - 1] * odims[m - 1];
        }
        let mut route = vec![0usize; k];
        for (m, &im) in order.iter().enumerate() {
            route[im - 1] = ostr[m];
        }
        let mut out = vec![0.0; self.data.len()];
        let mut digits = vec![0usize; k];
        let mut off = 0usize;
        for &v in &self.data {
            out[off] = v;
            for j in 0..k {
                digits[j] += 1;
                off += route[j];
                if digits[j] < self.dims[j] {
                    break;
                }
                off -= self.dims[j] * route[j];
                digits[j] = 0;
            }
        }
        Ok(DenseTensor { dims: odims, data: out })
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Element count of the given extents, rejecting empty or zero extents
/// and products that overflow.
pub fn checked_numel(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::shape("tensor order must be at least 1"));
    }
    let mut n = 1usize;
    for &d in dims {
        if d == 0 {
            return Err(Error::shape("zero extents are not allowed"));
        }
        n = n
            .checked_mul(d)
            .ok_or_else(|| Error::shape(format!("extent product overflows: {dims:?}")))?;
    }
    Ok(n)
}

fn check_permutation(order: &[usize], k: usize) -> Result<()> {
    if order.len() != k {
        return Err(Error::shape(format!("permutation length {} != order {k}", order.len())));
    }
    let mut seen = vec![false; k];
    for &m in order {
        if m < 1 || m > k || seen[m - 1] {
            return Err(Error::shape(format!("{order:?} is not a permutation of 1..={k}")));
        }
        seen[m - 1] = true;
    }
    Ok(())
}

fn check_mode(mode: usize, k: usize) -> Result<()> {
    if mode < 1 || mode > k {
        return Err(Error::shape(format!("mode {mode} out of range 1..={k}")));
    }
    Ok(())
}

/// 1-based column-major linear index of a 1-based multi-index:
/// `i_1 + (i_2 - 1) d_1 + (i_3 - 1) d_1 d_2 + ...`.
pub fn multi_index(idx: &[usize], dims: &[usize]) -> Result<usize> {
    if idx.len() != dims.len() {
        return Err(Error::shape(format!(
            "index length {} != tensor order {}",
            idx.len(),
            dims.len()
        )));
    }
    let mut off = 0usize;
    let mut stride = 1usize;
    for (&i, &d) in idx.iter().zip(dims) {
        if i < 1 || i > d {
            return Err(Error::shape(format!("index {idx:?} out of range for extents {dims:?}")));
        }
        off += (i - 1) * stride;
        stride *= d;
    }
    Ok(off + 1)
}

/// Inverse of [`multi_index`]: 1-based linear index to 1-based multi-index.
pub fn invert_multi_index(linear: usize, dims: &[usize]) -> Result<Vec<usize>> {
    let n = checked_numel(dims)?;
    if linear < 1 || linear > n {
        return Err(Error::shape(format!("linear index {linear} out of range 1..={n}")));
    }
    let mut rem = linear - 1;
    let idx = dims
        .iter()
        .map(|&d| {
            let i = rem % d;
            rem /= d;
            i + 1
        })
        .collect();
    Ok(idx)
}

/// Sum of entrywise products. Extents must match exactly.
pub fn inner_product(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::shape(format!(
            "inner product extents differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum())
}

fn matrix_from_f_data(rows: usize, cols: usize, data: Vec<f64>) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols).f(), data).expect("shape matches data length")
}

fn f_data_from_matrix(m: &Array2<f64>) -> Vec<f64> {
    let (rows, cols) = m.dim();
    let mut data = Vec::with_capacity(rows * cols);
    for j in 0..cols {
        for i in 0..rows {
            data.push(m[[i, j]]);
        }
    }
    data
}

/// Mode-`mode` unfolding: rows index mode `mode`, columns run over the
/// remaining modes in their original order (first of them fastest).
pub fn canonical_unfold(t: &DenseTensor, mode: usize) -> Result<Array2<f64>> {
    let k = t.order();
    check_mode(mode, k)?;
    let rows = t.dims()[mode - 1];
    let cols = t.numel() / rows;
    if mode == 1 {
        return Ok(matrix_from_f_data(rows, cols, t.data().to_vec()));
    }
    let mut order = Vec::with_capacity(k);
    order.push(mode);
    order.extend((1..=k).filter(|&m| m != mode));
    let p = t.permute(&order)?;
    Ok(matrix_from_f_data(rows, cols, p.into_data()))
}

/// Inverse of [`canonical_unfold`] for a tensor with extents `dims`.
pub fn canonical_fold(m: &Array2<f64>, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
    let k = dims.len();
    check_mode(mode, k)?;
    let rows = dims[mode - 1];
    let n = checked_numel(dims)?;
    if m.dim() != (rows, n / rows) {
        return Err(Error::shape(format!(
            "matrix {:?} does not fold into mode {mode} of {dims:?}",
            m.dim()
        )));
    }
    let mut order = Vec::with_capacity(k);
    order.push(mode);
    order.extend((1..=k).filter(|&mm| mm != mode));
    let pdims: Vec<usize> = order.iter().map(|&mm| dims[mm - 1]).collect();
    let permuted = DenseTensor::new(pdims, f_data_from_matrix(m))?;
    if mode == 1 {
        return permuted.reshape(dims);
    }
    let mut inverse = vec![0usize; k];
    for (pos, &mm) in order.iter().enumerate() {
        inverse[mm - 1] = pos + 1;
    }
    permuted.permute(&inverse)
}

/// Unfolding that groups modes `1..=k` into rows and `k+1..=K` into
/// columns. `k = K` yields a single-column matrix.
pub fn first_k_unfold(t: &DenseTensor, k: usize) -> Result<Array2<f64>> {
    check_mode(k, t.order())?;
    let rows: usize = t.dims()[..k].iter().product();
    let cols = t.numel() / rows;
    Ok(matrix_from_f_data(rows, cols, t.data().to_vec()))
}

/// Default number of column modes for circular unfoldings: `ceil(K / 2)`.
pub fn default_s(order: usize) -> usize {
    order.div_ceil(2)
}

/// Circular mode-`(k, s)` unfolding geometry.
///
/// Columns run over the `s` cyclically contiguous modes `k, k+1, ..., l`
/// (wrapping past `K`), rows over the remaining modes `l+1, ..., k-1` in
/// circular order. `s` must lie in `1..=K-1`, so both groups are nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnfoldingSpec {
    dims: Vec<usize>,
    mode: usize,
    s: usize,
    row_modes: Vec<usize>,
    col_modes: Vec<usize>,
}

impl UnfoldingSpec {
    pub fn circular(dims: &[usize], mode: usize, s: usize) -> Result<Self> {
        let k = dims.len();
        if k < 2 {
            return Err(Error::shape("circular unfoldings require order >= 2"));
        }
        check_mode(mode, k)?;
        if s < 1 || s > k - 1 {
            return Err(Error::invalid(format!("s = {s} out of range 1..={}", k - 1)));
        }
        checked_numel(dims)?;
        let wrap = |j: usize| ((mode - 1 + j) % k) + 1;
        let col_modes: Vec<usize> = (0..s).map(wrap).collect();
        let row_modes: Vec<usize> = (s..k).map(wrap).collect();
        Ok(UnfoldingSpec { dims: dims.to_vec(), mode, s, row_modes, col_modes })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Last column mode (`l` in the unfolding definition).
    pub fn last_col_mode(&self) -> usize {
        *self.col_modes.last().unwrap()
    }

    /// Row modes in circular order `l+1, ..., k-1`.
    pub fn row_modes(&self) -> &[usize] {
        &self.row_modes
    }

    /// Column modes in circular order `k, ..., l`.
    pub fn col_modes(&self) -> &[usize] {
        &self.col_modes
    }

    /// Row count `d_{1,k}`.
    pub fn d1(&self) -> usize {
        self.row_modes.iter().map(|&m| self.dims[m - 1]).product()
    }

    /// Column count `d_{2,k}`.
    pub fn d2(&self) -> usize {
        self.col_modes.iter().map(|&m| self.dims[m - 1]).product()
    }

    /// `d1 + d2`.
    pub fn dtilde(&self) -> usize {
        self.d1() + self.d2()
    }

    /// `min(d1, d2)`.
    pub fn dhat(&self) -> usize {
        self.d1().min(self.d2())
    }

    /// `max(d1, d2)`.
    pub fn dcheck(&self) -> usize {
        self.d1().max(self.d2())
    }

    pub fn unfold(&self, t: &DenseTensor) -> Result<Array2<f64>> {
        if t.dims() != self.dims.as_slice() {
            return Err(Error::shape(format!(
                "tensor extents {:?} do not match unfolding extents {:?}",
                t.dims(),
                self.dims
            )));
        }
        let mut order = self.row_modes.clone();
        order.extend(&self.col_modes);
        let p = t.permute(&order)?;
        Ok(matrix_from_f_data(self.d1(), self.d2(), p.into_data()))
    }

    pub fn fold(&self, m: &Array2<f64>) -> Result<DenseTensor> {
        if m.dim() != (self.d1(), self.d2()) {
            return Err(Error::shape(format!(
                "matrix {:?} does not match unfolding size {}x{}",
                m.dim(),
                self.d1(),
                self.d2()
            )));
        }
        let mut order = self.row_modes.clone();
        order.extend(&self.col_modes);
        let pdims: Vec<usize> = order.iter().map(|&mm| self.dims[mm - 1]).collect();
        let permuted = DenseTensor::new(pdims, f_data_from_matrix(m))?;
        let mut inverse = vec![0usize; self.dims.len()];
        for (pos, &mm) in order.iter().enumerate() {
            inverse[mm - 1] = pos + 1;
        }
        permuted.permute(&inverse)
    }
}

/// Circular mode-`(k, s)` unfolding of `t`.
pub fn circular_unfold(t: &DenseTensor, mode: usize, s: usize) -> Result<Array2<f64>> {
    UnfoldingSpec::circular(t.dims(), mode, s)?.unfold(t)
}

/// Inverse of [`circular_unfold`] for a tensor with extents `dims`.
pub fn circular_fold(m: &Array2<f64>, dims: &[usize], mode: usize, s: usize) -> Result<DenseTensor> {
    UnfoldingSpec::circular(dims, mode, s)?.fold(m)
}

/// Mode whose circular unfolding has the smallest `min(d1, d2)`; ties go
/// to the smallest mode number.
pub fn min_dhat_mode(dims: &[usize], s: usize) -> Result<usize> {
    let mut best = (usize::MAX, 0usize);
    for mode in 1..=dims.len() {
        let spec = UnfoldingSpec::circular(dims, mode, s)?;
        if spec.dhat() < best.0 {
            best = (spec.dhat(), mode);
        }
    }
    Ok(best.1)
}

/// Multiplies mode `mode` of `t` by `m`: extents change from `d_mode` to
/// `m.nrows()`, with `m.ncols() == d_mode`.
pub fn mode_k_product(t: &DenseTensor, m: &Array2<f64>, mode: usize) -> Result<DenseTensor> {
    check_mode(mode, t.order())?;
    let d = t.dims()[mode - 1];
    if m.ncols() != d {
        return Err(Error::shape(format!(
            "mode-{mode} product: matrix has {} columns, mode extent is {d}",
            m.ncols()
        )));
    }
    let unfolded = canonical_unfold(t, mode)?;
    let product = m.dot(&unfolded);
    let mut dims = t.dims().to_vec();
    dims[mode - 1] = m.nrows();
    canonical_fold(&product, mode, &dims)
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (am, an) = a.dim();
    let (bm, bn) = b.dim();
    let mut out = Array2::zeros((am * bm, an * bn));
    for i in 0..am {
        for j in 0..an {
            let v = a[[i, j]];
            if v == 0.0 {
                continue;
            }
            let mut block = out.slice_mut(s![i * bm..(i + 1) * bm, j * bn..(j + 1) * bn]);
            block.assign(&(b * v));
        }
    }
    out
}
