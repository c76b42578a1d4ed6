use crate::basis::IntensityModel;
use crate::kie::KernelModel;
use crate::simulate::{AnalyticIntensity, LgcpField};
use crate::tensor::increment_index;

use super::HarnessError;

/// Largest test lattice accepted.
pub const MAX_GRID_POINTS: usize = 10_000_000;

/// Regular test lattice of `g^D` cell midpoints `(i + 0.5) / g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    points_per_axis: usize,
    dim: usize,
}

impl GridSpec {
    pub fn new(points_per_axis: usize, dim: usize) -> Result<Self, HarnessError> {
        if points_per_axis < 2 || dim == 0 {
            return Err(HarnessError::Config(format!(
                "grid needs at least 2 points per axis and D >= 1, got g={points_per_axis}, D={dim}"
            )));
        }
        let total = (points_per_axis as f64).powi(dim as i32);
        if total > MAX_GRID_POINTS as f64 {
            return Err(HarnessError::Resource(format!(
                "test grid of {total} points exceeds {MAX_GRID_POINTS}; lower grid_points"
            )));
        }
        Ok(Self {
            points_per_axis,
            dim,
        })
    }

    /// 10 points per axis up to D = 5 and 6 beyond.
    pub fn default_points(dim: usize) -> usize {
        if dim <= 5 {
            10
        } else {
            6
        }
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis(&self) -> Vec<f64> {
        let g = self.points_per_axis as f64;
        (0..self.points_per_axis).map(|i| (i as f64 + 0.5) / g).collect()
    }

    /// All lattice points, first coordinate fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        lattice_points(&self.axis(), self.dim)
    }
}

pub(crate) fn lattice_points(axis: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let dims = vec![axis.len(); dim];
    let total = axis.len().pow(dim as u32);
    let mut idx = vec![0usize; dim];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        out.push(idx.iter().map(|&i| axis[i]).collect());
        increment_index(&mut idx, &dims);
    }
    out
}

/// Anything that can be evaluated as an intensity on `[0, 1]^D`.
pub trait IntensityFn: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Values on `axis^D`, first coordinate fastest.
    fn lattice(&self, axis: &[f64]) -> Vec<f64> {
        lattice_points(axis, self.dim())
            .iter()
            .map(|x| self.value(x))
            .collect()
    }

    fn values_at(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.iter().map(|x| self.value(x)).collect()
    }
}

impl IntensityFn for IntensityModel {
    fn dim(&self) -> usize {
        IntensityModel::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate_unchecked(x)
    }

    fn lattice(&self, axis: &[f64]) -> Vec<f64> {
        self.evaluate_lattice(axis)
            .expect("lattice axes lie in the unit interval")
    }
}

impl IntensityFn for KernelModel {
    fn dim(&self) -> usize {
        KernelModel::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x)
    }

    fn lattice(&self, axis: &[f64]) -> Vec<f64> {
        self.evaluate_lattice(axis)
    }
}

impl IntensityFn for AnalyticIntensity {
    fn dim(&self) -> usize {
        AnalyticIntensity::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

impl IntensityFn for LgcpField {
    fn dim(&self) -> usize {
        LgcpField::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// Constant intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl IntensityFn for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }
}

/// A model fitted on permuted coordinates, evaluated in the original ones:
/// `inner` sees coordinate `permutation[k]` at position `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Permuted<T> {
    pub inner: T,
    pub permutation: Vec<usize>,
}

impl<T: IntensityFn> IntensityFn for Permuted<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = self.permutation.iter().map(|&k| x[k]).collect();
        self.inner.value(&y)
    }

    fn lattice(&self, axis: &[f64]) -> Vec<f64> {
        let inner = self.inner.lattice(axis);
        let dim = self.dim();
        let g = axis.len();
        let dims = vec![g; dim];
        let strides: Vec<usize> = (0..dim).map(|k| g.pow(k as u32)).collect();
        let mut idx = vec![0usize; dim];
        let mut out = Vec::with_capacity(inner.len());
        for _ in 0..inner.len() {
            // inner coordinate k takes the outer index of coordinate perm[k]
            let off: usize = self
                .permutation
                .iter()
                .enumerate()
                .map(|(k, &p)| idx[p] * strides[k])
                .sum();
            out.push(inner[off]);
            increment_index(&mut idx, &dims);
        }
        out
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_dims(a: &dyn IntensityFn, b: &dyn IntensityFn, grid: &GridSpec) -> Result<(), HarnessError> {
    if a.dim() != grid.dim() || b.dim() != grid.dim() {
        return Err(HarnessError::Config(format!(
            "dimension mismatch: {} vs {} on a {}-dimensional grid",
            a.dim(),
            b.dim(),
            grid.dim()
        )));
    }
    Ok(())
}

/// `|a - b| / |b|` for two value vectors.
pub fn relative_difference(a: &[f64], b: &[f64]) -> Result<f64, HarnessError> {
    let denom = l2(b);
    if denom == 0.0 {
        return Err(HarnessError::ZeroReference);
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(l2(&diff) / denom)
}

/// Discrete L2 relative error of `estimate` against `truth` on the lattice.
pub fn relative_error(
    estimate: &dyn IntensityFn,
    truth: &dyn IntensityFn,
    grid: &GridSpec,
) -> Result<f64, HarnessError> {
    check_dims(estimate, truth, grid)?;
    let axis = grid.axis();
    relative_difference(&estimate.lattice(&axis), &truth.lattice(&axis))
}

/// `|est1 - est2| / |est2|` on the lattice; not symmetric.
pub fn pairwise_relative_error(
    est1: &dyn IntensityFn,
    est2: &dyn IntensityFn,
    grid: &GridSpec,
) -> Result<f64, HarnessError> {
    relative_error(est1, est2, grid)
}
