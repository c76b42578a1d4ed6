//! Dense tensor algebra.
//!
//! Tensors are stored flat with the **first index varying fastest**: the entry
//! at multi-index `(i_0, ..., i_{s-1})` lives at offset
//! `i_0 + d_0 * (i_1 + d_1 * (i_2 + ...))`.
//!
//! The mode-`j` matricization puts mode `j` on the rows and enumerates the
//! remaining modes `(0, .., j-1, j+1, .., s-1)` on the columns, again with the
//! first remaining mode varying fastest. [`kron_factors`] uses the matching
//! factor order, so that
//! `matricize(T x_{k!=j} U_k^T, j) == matricize(T, j) * kron_factors(U_k, k != j)`.
//!
//! Modes are zero-based throughout.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Matrix = DMatrix<f64>;

/// Above this size of the smaller matrix side the SVD switches from the Gram
/// eigendecomposition to a bidiagonal SVD.
pub const GRAM_SVD_MAX_DIM: usize = 512;

/// Tolerance used when checking that factor matrices are column-orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum TensorError {
    #[error("tensor dims must be non-empty and positive, got {0:?}")]
    InvalidDims(Vec<usize>),

    #[error("data length {len} does not match product of dims {dims:?}")]
    LengthMismatch { len: usize, dims: Vec<usize> },

    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("requested rank {rank} but matrix is {rows}x{cols}")]
    RankTooLarge { rank: usize, rows: usize, cols: usize },

    #[error("matrix or tensor contains non-finite entries")]
    NonFinite,

    #[error("threshold must be non-negative, got {0}")]
    NegativeThreshold(f64),

    #[error("factor for mode {mode} is not column-orthonormal (Gram deviation {deviation:.3e})")]
    NotOrthonormal { mode: usize, deviation: f64 },

    #[error("at least one factor matrix is required")]
    EmptyFactors,
}

/// An order-`s` real array with first-index-fastest storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn check_dims(dims: &[usize]) -> Result<usize, TensorError> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(TensorError::InvalidDims(dims.to_vec()));
    }
    Ok(dims.iter().product())
}

impl DenseTensor {
    pub fn zeros(dims: &[usize]) -> Result<Self, TensorError> {
        let len = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        })
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self, TensorError> {
        let len = check_dims(dims)?;
        if data.len() != len {
            return Err(TensorError::LengthMismatch {
                len: data.len(),
                dims: dims.to_vec(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite);
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn<F>(dims: &[usize], mut f: F) -> Result<Self, TensorError>
    where
        F: FnMut(&[usize]) -> f64,
    {
        let len = check_dims(dims)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment_index(&mut idx, dims);
        }
        Self::from_vec(dims, data)
    }

    /// Wraps a matrix as an order-2 tensor.
    pub fn from_matrix(m: &Matrix) -> Result<Self, TensorError> {
        // nalgebra is column-major, which is exactly first-index-fastest.
        Self::from_vec(&[m.nrows(), m.ncols()], m.as_slice().to_vec())
    }

    /// Outer product `v_0 ⊗ v_1 ⊗ ...` of the given vectors.
    pub fn outer(vectors: &[&[f64]]) -> Result<Self, TensorError> {
        let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
        Self::from_fn(&dims, |idx| {
            idx.iter().zip(vectors).map(|(&i, v)| v[i]).product()
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        for k in (0..self.dims.len()).rev() {
            off = off * self.dims[k] + idx[k];
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> Result<f64, TensorError> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TensorError> {
        self.same_shape(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        self.same_shape(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    fn same_shape(&self, other: &Self) -> Result<(), TensorError> {
        if self.dims != other.dims {
            return Err(TensorError::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<(), TensorError> {
        if mode >= self.order() {
            return Err(TensorError::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Sizes `(left, mid, right)` with `left = prod(dims[..mode])` and
    /// `right = prod(dims[mode+1..])`.
    fn split_at_mode(dims: &[usize], mode: usize) -> (usize, usize, usize) {
        let left = dims[..mode].iter().product();
        let right = dims[mode + 1..].iter().product();
        (left, dims[mode], right)
    }
}

/// Advances a first-index-fastest multi-index counter.
pub(crate) fn increment_index(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}

/// Mode-`mode` unfolding of `t` into a `dims[mode] x prod(other dims)` matrix.
pub fn matricize(t: &DenseTensor, mode: usize) -> Result<Matrix, TensorError> {
    t.check_mode(mode)?;
    let (left, mid, right) = DenseTensor::split_at_mode(&t.dims, mode);
    let mut out = Matrix::zeros(mid, left * right);
    for b in 0..right {
        for i in 0..mid {
            let src = left * (i + mid * b);
            for a in 0..left {
                out[(i, a + left * b)] = t.data[src + a];
            }
        }
    }
    Ok(out)
}

/// Inverse of [`matricize`]: folds a mode-`mode` unfolding back into a tensor
/// with the given dims.
pub fn unmatricize(m: &Matrix, mode: usize, dims: &[usize]) -> Result<DenseTensor, TensorError> {
    let len = check_dims(dims)?;
    if mode >= dims.len() {
        return Err(TensorError::ModeOutOfRange {
            mode,
            order: dims.len(),
        });
    }
    let (left, mid, right) = DenseTensor::split_at_mode(dims, mode);
    if m.nrows() != mid || m.ncols() != left * right {
        return Err(TensorError::ShapeMismatch(format!(
            "cannot fold a {}x{} matrix into dims {:?} at mode {}",
            m.nrows(),
            m.ncols(),
            dims,
            mode
        )));
    }
    let mut data = vec![0.0; len];
    for b in 0..right {
        for i in 0..mid {
            let dst = left * (i + mid * b);
            for a in 0..left {
                data[dst + a] = m[(i, a + left * b)];
            }
        }
    }
    DenseTensor::from_vec(dims, data)
}

/// Mode product `t x_mode m`, replacing `dims[mode]` by `m.nrows()`.
pub fn mode_product(t: &DenseTensor, m: &Matrix, mode: usize) -> Result<DenseTensor, TensorError> {
    t.check_mode(mode)?;
    if m.ncols() != t.dims[mode] {
        return Err(TensorError::ShapeMismatch(format!(
            "matrix with {} columns cannot act on mode {} of size {}",
            m.ncols(),
            mode,
            t.dims[mode]
        )));
    }
    let unfolded = matricize(t, mode)?;
    let product = m * unfolded;
    let mut dims = t.dims.clone();
    dims[mode] = m.nrows();
    unmatricize(&product, mode, &dims)
}

/// Kronecker product of factor matrices, ordered so that the first matrix's
/// indices vary fastest (matching the column order of [`matricize`]).
pub fn kron_factors(mats: &[&Matrix]) -> Result<Matrix, TensorError> {
    let (first, rest) = mats.split_first().ok_or(TensorError::EmptyFactors)?;
    let mut acc = (*first).clone();
    for m in rest {
        acc = m.kronecker(&acc);
    }
    Ok(acc)
}

/// Leading singular triplets of a matrix.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (k, s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    fn truncate(mut self, r: usize) -> Self {
        self.u = self.u.columns(0, r).into_owned();
        self.v = self.v.columns(0, r).into_owned();
        self.singular_values.truncate(r);
        self
    }
}

fn check_finite(m: &Matrix) -> Result<(), TensorError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TensorError::NonFinite)
    }
}

/// Thin SVD with `min(rows, cols)` components, singular values nonincreasing.
pub fn thin_svd(m: &Matrix) -> Result<SvdFactors, TensorError> {
    check_finite(m)?;
    let (p, q) = m.shape();
    if p == 0 || q == 0 {
        return Err(TensorError::ShapeMismatch(format!("empty {p}x{q} matrix")));
    }
    let mut f = if p.min(q) <= GRAM_SVD_MAX_DIM {
        gram_svd(m)
    } else {
        bidiagonal_svd(m)
    };
    fix_signs(&mut f);
    Ok(f)
}

/// Rank-`r` truncated SVD.
pub fn truncated_svd(m: &Matrix, r: usize) -> Result<SvdFactors, TensorError> {
    let (p, q) = m.shape();
    if r == 0 || r > p.min(q) {
        return Err(TensorError::RankTooLarge {
            rank: r,
            rows: p,
            cols: q,
        });
    }
    Ok(thin_svd(m)?.truncate(r))
}

/// Singular values of `m`, nonincreasing.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>, TensorError> {
    Ok(thin_svd(m)?.singular_values)
}

/// Eigendecomposition of the Gram matrix on the smaller side.
fn gram_svd(m: &Matrix) -> SvdFactors {
    let (p, q) = m.shape();
    let transposed = p > q;
    let a = if transposed { m.transpose() } else { m.clone() };
    // a is k x l with k <= l
    let k = a.nrows();
    let gram = &a * a.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let zero_cut = 16.0 * (k as f64) * f64::EPSILON * lambda_max;

    let mut left = Matrix::zeros(k, k);
    let mut sigma = Vec::with_capacity(k);
    for (c, &src) in order.iter().enumerate() {
        left.set_column(c, &eig.eigenvectors.column(src));
        let lam = eig.eigenvalues[src];
        sigma.push(if lam > zero_cut { lam.sqrt() } else { 0.0 });
    }
    // Modified Gram-Schmidt cleans the eigenvector basis to working precision.
    orthonormalize_columns(&mut left, k);

    let at = a.transpose();
    let mut right = Matrix::zeros(a.ncols(), k);
    let mut filled = 0;
    for (c, &sv) in sigma.iter().enumerate().take(k) {
        if sv > 0.0 {
            let col = &at * left.column(c) / sv;
            right.set_column(c, &col);
            filled = c + 1;
        } else {
            break;
        }
    }
    orthonormalize_columns(&mut right, filled);
    complete_orthonormal(&mut right, filled);

    if transposed {
        SvdFactors {
            u: right,
            singular_values: sigma,
            v: left,
        }
    } else {
        SvdFactors {
            u: left,
            singular_values: sigma,
            v: right,
        }
    }
}

fn bidiagonal_svd(m: &Matrix) -> SvdFactors {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("left vectors requested");
    let vt = svd.v_t.expect("right vectors requested");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut uu = Matrix::zeros(u.nrows(), k);
    let mut vv = Matrix::zeros(vt.ncols(), k);
    let mut sigma = Vec::with_capacity(k);
    for (c, &src) in order.iter().enumerate() {
        uu.set_column(c, &u.column(src));
        vv.set_column(c, &vt.row(src).transpose());
        sigma.push(svd.singular_values[src].max(0.0));
    }
    SvdFactors {
        u: uu,
        singular_values: sigma,
        v: vv,
    }
}

/// Makes the largest-magnitude entry of every left singular vector positive
/// (lowest index wins ties).
fn fix_signs(f: &mut SvdFactors) {
    for c in 0..f.u.ncols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for r in 0..f.u.nrows() {
            let a = f.u[(r, c)].abs();
            if a > best_abs {
                best_abs = a;
                best = r;
            }
        }
        if f.u[(best, c)] < 0.0 {
            f.u.column_mut(c).neg_mut();
            f.v.column_mut(c).neg_mut();
        }
    }
}

/// Modified Gram-Schmidt on the first `count` columns, in place.
pub(crate) fn orthonormalize_columns(m: &mut Matrix, count: usize) {
    for c in 0..count {
        for prev in 0..c {
            let proj = m.column(prev).dot(&m.column(c));
            let p = m.column(prev).into_owned();
            m.column_mut(c).axpy(-proj, &p, 1.0);
        }
        let n = m.column(c).norm();
        if n > 0.0 {
            m.column_mut(c).unscale_mut(n);
        }
    }
}

/// Fills columns `filled..` of `m` with an orthonormal completion of the
/// first `filled` (already orthonormal) columns, drawing from the standard
/// basis.
pub(crate) fn complete_orthonormal(m: &mut Matrix, filled: usize) {
    let rows = m.nrows();
    let mut next = filled;
    let mut candidate = 0;
    while next < m.ncols() && candidate < rows {
        let mut v = nalgebra::DVector::<f64>::zeros(rows);
        v[candidate] = 1.0;
        candidate += 1;
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for prev in 0..next {
                let proj = m.column(prev).dot(&v);
                v.axpy(-proj, &m.column(prev), 1.0);
            }
        }
        let n = v.norm();
        if n > 0.5 {
            m.set_column(next, &(v / n));
            next += 1;
        }
    }
}

/// Largest absolute deviation of `U^T U` from the identity.
pub fn orthonormality_deviation(u: &Matrix) -> f64 {
    let g = u.transpose() * u;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Soft singular-value thresholding: shrinks every singular value by `gamma`
/// and clamps at zero, keeping the singular vectors of `m`.
pub fn soft_threshold_svd(m: &Matrix, gamma: f64) -> Result<Matrix, TensorError> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(TensorError::NegativeThreshold(gamma));
    }
    let mut f = thin_svd(m)?;
    for s in f.singular_values.iter_mut() {
        *s = (*s - gamma).max(0.0);
    }
    Ok(f.reconstruct())
}

/// Applies the orthogonal projector `U_j U_j^T` at every mode.
pub fn tucker_project(t: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor, TensorError> {
    if factors.len() != t.order() {
        return Err(TensorError::ShapeMismatch(format!(
            "{} factors for an order-{} tensor",
            factors.len(),
            t.order()
        )));
    }
    let mut out = t.clone();
    for (mode, u) in factors.iter().enumerate() {
        if u.nrows() != t.dims()[mode] {
            return Err(TensorError::ShapeMismatch(format!(
                "factor {} has {} rows, mode size is {}",
                mode,
                u.nrows(),
                t.dims()[mode]
            )));
        }
        let deviation = orthonormality_deviation(u);
        if deviation > ORTHONORMAL_TOL {
            return Err(TensorError::NotOrthonormal { mode, deviation });
        }
        // (U U^T) X computed as U (U^T X) keeps the intermediate small.
        let core = mode_product(&out, &u.transpose(), mode)?;
        out = mode_product(&core, u, mode)?;
    }
    Ok(out)
}

/// Number of singular values above `tol * sigma_1`.
pub fn numerical_rank(m: &Matrix, rel_tol: f64) -> Result<usize, TensorError> {
    let s = singular_values(m)?;
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > rel_tol * top).count())
}
