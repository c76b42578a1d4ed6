//! Orthonormal shifted Legendre bases on `[0, 1]` and their tensor products.
//!
//! `phi_k(x) = sqrt(2k + 1) * P_k(2x - 1)` for `k = 0..m`, so that
//! `int_0^1 phi_j phi_k = delta_jk`. A block of `d` coordinates uses the
//! `m^d` products `prod_t phi_{mu_t}(x_t)`, flattened with the first
//! coordinate's index varying fastest (the same convention as
//! [`DenseTensor`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{mode_product, DenseTensor, Matrix, TensorError};

/// Maximum number of entries in a coefficient tensor or quadrature grid.
pub const MAX_GRID_ENTRIES: usize = 100_000_000;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BasisError {
    #[error("basis size m must be at least 1")]
    ZeroDegree,

    #[error("coordinate {0} lies outside [0, 1]")]
    OutOfDomain(f64),

    #[error("partition blocks must be non-empty and positive, got {0:?}")]
    InvalidPartition(Vec<usize>),

    #[error("block {block} out of range for a partition with {blocks} blocks")]
    BlockOutOfRange { block: usize, blocks: usize },

    #[error("expected a point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient dims {got:?} do not match the basis layout {expected:?}")]
    CoefficientShape { expected: Vec<usize>, got: Vec<usize> },

    #[error("quadrature needs at least m = {m} nodes, got {nodes}")]
    TooFewNodes { m: usize, nodes: usize },

    #[error("{what} would need {requested} entries, above the limit of {limit}; reduce m, the node count or the dimension")]
    ResourceGuard {
        what: &'static str,
        requested: f64,
        limit: usize,
    },

    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Writes `phi_0(x), .., phi_{m-1}(x)` into `out` (length `m`) without
/// validating `x`.
#[inline]
pub fn legendre_fill(x: f64, out: &mut [f64]) {
    let m = out.len();
    if m == 0 {
        return;
    }
    let t = 2.0 * x - 1.0;
    let mut p_prev = 1.0;
    out[0] = 1.0;
    if m == 1 {
        return;
    }
    let mut p = t;
    out[1] = 3f64.sqrt() * t;
    for k in 1..m - 1 {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
        out[k + 1] = (2.0 * kf + 3.0).sqrt() * next;
    }
}

/// Orthonormal shifted Legendre values `(phi_1(x), .., phi_m(x))`.
pub fn legendre_eval(m: usize, x: f64) -> Result<Vec<f64>, BasisError> {
    if m == 0 {
        return Err(BasisError::ZeroDegree);
    }
    check_unit(x)?;
    let mut out = vec![0.0; m];
    legendre_fill(x, &mut out);
    Ok(out)
}

fn check_unit(x: f64) -> Result<(), BasisError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(BasisError::OutOfDomain(x))
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, nodes increasing.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        // t is the i-th largest root on [-1, 1]
        nodes[n - 1 - i] = 0.5 * (1.0 + t);
        nodes[i] = 0.5 * (1.0 - t);
        weights[n - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Ordered split of the `D` coordinates into contiguous blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    block_dims: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(block_dims: Vec<usize>) -> Result<Self, BasisError> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(BasisError::InvalidPartition(block_dims));
        }
        Ok(Self { block_dims })
    }

    /// `s` blocks of as-equal-as-possible size, larger blocks last.
    pub fn balanced(dim: usize, blocks: usize) -> Result<Self, BasisError> {
        if blocks == 0 || blocks > dim {
            return Err(BasisError::InvalidPartition(vec![dim, blocks]));
        }
        let base = dim / blocks;
        let extra = dim % blocks;
        let dims = (0..blocks)
            .map(|j| base + usize::from(j >= blocks - extra))
            .collect();
        Self::new(dims)
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// Index of the first coordinate of each block.
    pub fn block_starts(&self) -> Vec<usize> {
        let mut acc = 0;
        self.block_dims
            .iter()
            .map(|d| {
                let s = acc;
                acc += d;
                s
            })
            .collect()
    }

    /// Coefficient tensor dims `(m^{d_1}, .., m^{d_s})`.
    pub fn coefficient_dims(&self, m: usize) -> Result<Vec<usize>, BasisError> {
        if m == 0 {
            return Err(BasisError::ZeroDegree);
        }
        let total = (m as f64).powi(self.dim() as i32);
        if total > MAX_GRID_ENTRIES as f64 {
            return Err(BasisError::ResourceGuard {
                what: "coefficient tensor",
                requested: total,
                limit: MAX_GRID_ENTRIES,
            });
        }
        Ok(self.block_dims.iter().map(|&d| m.pow(d as u32)).collect())
    }
}

/// Tensor-product basis of one block evaluated at `x_block`.
pub fn block_basis_eval(
    partition: &PartitionSpec,
    m: usize,
    block: usize,
    x_block: &[f64],
) -> Result<Vec<f64>, BasisError> {
    if m == 0 {
        return Err(BasisError::ZeroDegree);
    }
    let blocks = partition.num_blocks();
    let d = *partition
        .block_dims()
        .get(block)
        .ok_or(BasisError::BlockOutOfRange { block, blocks })?;
    if x_block.len() != d {
        return Err(BasisError::DimensionMismatch {
            expected: d,
            got: x_block.len(),
        });
    }
    for &x in x_block {
        check_unit(x)?;
    }
    let mut scratch = vec![0.0; m];
    let mut out = Vec::new();
    product_basis_into(x_block, m, &mut scratch, &mut out);
    Ok(out)
}

/// Fills `out` with the `m^d` product basis at `x` (first coordinate
/// fastest). `scratch` must have length `m`.
pub(crate) fn product_basis_into(x: &[f64], m: usize, scratch: &mut [f64], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    for &xt in x {
        legendre_fill(xt, scratch);
        let prev = out.len();
        out.resize(prev * m, 0.0);
        // expand in place from the back so the new coordinate varies slowest
        for mu in (0..m).rev() {
            let f = scratch[mu];
            for r in (0..prev).rev() {
                out[mu * prev + r] = out[r] * f;
            }
        }
    }
}

/// Basis matrix of a block over the `g^d` lattice formed by `axis` in every
/// coordinate: rows are lattice points (first coordinate fastest), columns
/// basis functions.
pub(crate) fn lattice_basis_matrix(axis: &[f64], d: usize, m: usize) -> Matrix {
    let g = axis.len();
    let rows = g.pow(d as u32);
    let cols = m.pow(d as u32);
    let mut out = Matrix::zeros(rows, cols);
    let mut scratch = vec![0.0; m];
    let mut vals = Vec::with_capacity(cols);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let axes = vec![g; d];
    for r in 0..rows {
        for t in 0..d {
            x[t] = axis[idx[t]];
        }
        product_basis_into(&x, m, &mut scratch, &mut vals);
        for (c, v) in vals.iter().enumerate() {
            out[(r, c)] = *v;
        }
        crate::tensor::increment_index(&mut idx, &axes);
    }
    out
}

/// A fitted basis-expansion intensity `x -> b x_1 phi^(1)(x_1) .. x_s phi^(s)(x_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityModel {
    partition: PartitionSpec,
    degree: usize,
    coefficients: DenseTensor,
    clip_negative: bool,
}

impl IntensityModel {
    /// Builds a model; evaluation clips negative values at zero unless
    /// [`with_clipping`](Self::with_clipping) turns it off.
    pub fn new(
        partition: PartitionSpec,
        degree: usize,
        coefficients: DenseTensor,
    ) -> Result<Self, BasisError> {
        let expected = partition.coefficient_dims(degree)?;
        if coefficients.dims() != expected.as_slice() {
            return Err(BasisError::CoefficientShape {
                expected,
                got: coefficients.dims().to_vec(),
            });
        }
        Ok(Self {
            partition,
            degree,
            coefficients,
            clip_negative: true,
        })
    }

    pub fn with_clipping(mut self, clip: bool) -> Self {
        self.clip_negative = clip;
        self
    }

    pub fn partition(&self) -> &PartitionSpec {
        &self.partition
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficients(&self) -> &DenseTensor {
        &self.coefficients
    }

    pub fn clips_negative(&self) -> bool {
        self.clip_negative
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    /// Evaluates the model at a point of `[0, 1]^D`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, BasisError> {
        if x.len() != self.dim() {
            return Err(BasisError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for &v in x {
            check_unit(v)?;
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let m = self.degree;
        let mut scratch = vec![0.0; m];
        let mut basis = Vec::new();
        // Contract modes from the last one: the running tensor keeps the
        // leading modes, stored first-fastest, so the last mode is outermost.
        let mut current: Vec<f64> = self.coefficients.data().to_vec();
        let starts = self.partition.block_starts();
        for j in (0..self.partition.num_blocks()).rev() {
            let d = self.partition.block_dims()[j];
            product_basis_into(&x[starts[j]..starts[j] + d], m, &mut scratch, &mut basis);
            let p = basis.len();
            let inner = current.len() / p;
            let mut next = vec![0.0; inner];
            for (mu, &bv) in basis.iter().enumerate() {
                let chunk = &current[mu * inner..(mu + 1) * inner];
                for (acc, c) in next.iter_mut().zip(chunk) {
                    *acc += c * bv;
                }
            }
            current = next;
        }
        let v = current[0];
        if self.clip_negative {
            v.max(0.0)
        } else {
            v
        }
    }

    /// Values on the lattice `axis^D`, first coordinate fastest.
    pub fn evaluate_lattice(&self, axis: &[f64]) -> Result<Vec<f64>, BasisError> {
        for &v in axis {
            check_unit(v)?;
        }
        let mut t = self.coefficients.clone();
        for (j, &d) in self.partition.block_dims().iter().enumerate() {
            let phi = lattice_basis_matrix(axis, d, self.degree);
            t = mode_product(&t, &phi, j)?;
        }
        let mut vals = t.into_data();
        if self.clip_negative {
            for v in vals.iter_mut() {
                *v = v.max(0.0);
            }
        }
        Ok(vals)
    }
}

/// Projects `f` onto the tensor-product basis by product Gauss-Legendre
/// quadrature with `quad_nodes` nodes per coordinate.
pub fn project_function<F>(
    f: F,
    partition: &PartitionSpec,
    m: usize,
    quad_nodes: usize,
) -> Result<DenseTensor, BasisError>
where
    F: Fn(&[f64]) -> f64,
{
    let coef_dims = partition.coefficient_dims(m)?;
    if quad_nodes < m {
        return Err(BasisError::TooFewNodes {
            m,
            nodes: quad_nodes,
        });
    }
    let dim = partition.dim();
    let grid_size = (quad_nodes as f64).powi(dim as i32);
    if grid_size > MAX_GRID_ENTRIES as f64 {
        return Err(BasisError::ResourceGuard {
            what: "quadrature grid",
            requested: grid_size,
            limit: MAX_GRID_ENTRIES,
        });
    }
    let (nodes, weights) = gauss_legendre(quad_nodes);

    // f times the product weight at every node, laid out as a tensor with one
    // mode per block.
    let node_dims: Vec<usize> = partition
        .block_dims()
        .iter()
        .map(|&d| quad_nodes.pow(d as u32))
        .collect();
    let total = grid_size as usize;
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let axes = vec![quad_nodes; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for t in 0..dim {
            x[t] = nodes[idx[t]];
            w *= weights[idx[t]];
        }
        values.push(f(&x) * w);
        crate::tensor::increment_index(&mut idx, &axes);
    }
    let mut t = DenseTensor::from_vec(&node_dims, values)?;
    for (j, &d) in partition.block_dims().iter().enumerate() {
        let phi = lattice_basis_matrix(&nodes, d, m);
        t = mode_product(&t, &phi.transpose(), j)?;
    }
    debug_assert_eq!(t.dims(), coef_dims.as_slice());
    Ok(t)
}

/// Default quadrature resolution for [`project_function`].
pub fn default_quad_nodes(m: usize) -> usize {
    2 * m
}
