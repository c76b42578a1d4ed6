//! Point process generators: the benchmark scenario intensities, Poisson
//! sampling by thinning, log-Gaussian Cox processes, Neyman-Scott cluster
//! processes and random thinning splits.

use std::f64::consts::PI;

use nalgebra::Cholesky;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{mode_product, DenseTensor, Matrix};

/// Largest LGCP lattice (total nodes) accepted.
pub const MAX_LGCP_NODES: usize = 10_000_000;

/// Dominating-constant inflation for LGCP thinning. Multilinear interpolation
/// never exceeds the largest node value, so any factor >= 1 is valid.
pub const LGCP_SAFETY_FACTOR: f64 = 1.05;

/// RBF squared lengthscale of the scenario 4 covariance.
pub const LGCP_LENGTHSCALE2: f64 = 0.08;

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-4;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("intensity {value} at a sampled location exceeds the dominating constant {bound}")]
    BoundViolation { value: f64, bound: f64 },

    #[error("intensity {0} at a sampled location is negative or not finite")]
    InvalidIntensity(f64),

    #[error("point has dimension {got}, pattern has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {0} lies outside [0, 1]")]
    OutOfDomain(f64),

    #[error("scenario {0} has no deterministic intensity; sample it with sample_lgcp")]
    NotDeterministic(u8),

    #[error("unknown scenario {0}")]
    UnknownScenario(u8),

    #[error("LGCP lattice of {requested} nodes exceeds the limit of {limit}; lower grid_res")]
    ResourceGuard { requested: f64, limit: usize },

    #[error("covariance factorization failed even with jitter {0:e}")]
    Factorization(f64),
}

/// One realization of a point process on `[0, 1]^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    dim: usize,
    coords: Vec<f64>,
}

impl PointPattern {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    /// Builds a pattern from row-major coordinates (`dim` values per point).
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self, SimError> {
        if dim == 0 {
            return Err(SimError::InvalidParameter("dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(SimError::DimensionMismatch {
                expected: dim,
                got: coords.len() % dim,
            });
        }
        if let Some(&bad) = coords.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(SimError::OutOfDomain(bad));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self, SimError> {
        let mut p = Self::empty(dim);
        for x in points {
            p.push(x)?;
        }
        Ok(p)
    }

    pub fn push(&mut self, x: &[f64]) -> Result<(), SimError> {
        if x.len() != self.dim {
            return Err(SimError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if let Some(&bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(SimError::OutOfDomain(bad));
        }
        self.coords.extend_from_slice(x);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Same points with coordinates reordered: new coordinate `k` is old
    /// coordinate `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for p in self.iter() {
            coords.extend(perm.iter().map(|&k| p[k]));
        }
        Self {
            dim: perm.len(),
            coords,
        }
    }
}

/// The four simulation scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// `100 (sin(pi sum x_i + pi/4) + 1)`
    Sinusoidal,
    /// `exp(-|x - 0.5|^2 / 2)`
    Gaussian,
    /// Ginzburg-Landau intensity.
    GinzburgLandau,
    /// Log-Gaussian Cox process with RBF covariance.
    LogGaussianCox,
}

impl Scenario {
    pub fn from_id(id: u8) -> Result<Self, SimError> {
        match id {
            1 => Ok(Self::Sinusoidal),
            2 => Ok(Self::Gaussian),
            3 => Ok(Self::GinzburgLandau),
            4 => Ok(Self::LogGaussianCox),
            other => Err(SimError::UnknownScenario(other)),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Self::Sinusoidal => 1,
            Self::Gaussian => 2,
            Self::GinzburgLandau => 3,
            Self::LogGaussianCox => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub dim: usize,
    /// Multiplies the intensity; 1 reproduces the printed formulas.
    pub amplitude: f64,
}

impl ScenarioSpec {
    pub fn new(id: u8, dim: usize) -> Result<Self, SimError> {
        let scenario = Scenario::from_id(id)?;
        if dim < 2 {
            return Err(SimError::InvalidParameter(format!(
                "scenario dimension must be at least 2, got {dim}"
            )));
        }
        Ok(Self {
            scenario,
            dim,
            amplitude: 1.0,
        })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self, SimError> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(SimError::InvalidParameter(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        self.amplitude = amplitude;
        Ok(self)
    }
}

/// Closed-form intensity of scenarios 1-3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticIntensity {
    spec: ScenarioSpec,
}

pub fn scenario_intensity(spec: ScenarioSpec) -> Result<AnalyticIntensity, SimError> {
    if spec.scenario == Scenario::LogGaussianCox {
        return Err(SimError::NotDeterministic(4));
    }
    Ok(AnalyticIntensity { spec })
}

impl AnalyticIntensity {
    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn spec(&self) -> ScenarioSpec {
        self.spec
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let a = self.spec.amplitude;
        match self.spec.scenario {
            Scenario::Sinusoidal => {
                let s: f64 = x.iter().sum();
                a * 100.0 * ((PI * s + PI / 4.0).sin() + 1.0)
            }
            Scenario::Gaussian => {
                let r2: f64 = x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum();
                a * (-r2 / 2.0).exp()
            }
            Scenario::GinzburgLandau => {
                let d1 = (x.len() + 1) as f64;
                let coupling: f64 = x
                    .windows(2)
                    .map(|w| 0.01 * ((w[0] - w[1]) * d1).powi(2))
                    .sum();
                let potential: f64 = x.iter().map(|v| 1.25 * (v * v - 1.0).powi(2)).sum();
                a * (-(coupling + potential) / 8.0).exp()
            }
            Scenario::LogGaussianCox => unreachable!("rejected by scenario_intensity"),
        }
    }

    /// Supremum over `[0, 1]^D`, used as the thinning bound.
    pub fn sup(&self) -> f64 {
        let a = self.spec.amplitude;
        match self.spec.scenario {
            Scenario::Sinusoidal => 200.0 * a,
            Scenario::Gaussian => a,
            // exponent is <= 0 on the cube
            Scenario::GinzburgLandau => a,
            Scenario::LogGaussianCox => unreachable!("rejected by scenario_intensity"),
        }
    }
}

/// Inhomogeneous Poisson sampling on `[0, 1]^D` by thinning a homogeneous
/// process of rate `lambda_max`.
pub fn sample_poisson<F, R>(
    lambda: F,
    lambda_max: f64,
    dim: usize,
    rng: &mut R,
) -> Result<PointPattern, SimError>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(SimError::InvalidParameter(format!(
            "dominating constant must be positive and finite, got {lambda_max}"
        )));
    }
    if dim == 0 {
        return Err(SimError::InvalidParameter("dimension must be positive".into()));
    }
    let count = Poisson::new(lambda_max)
        .map_err(|e| SimError::InvalidParameter(e.to_string()))?
        .sample(rng) as usize;
    let mut out = PointPattern::empty(dim);
    out.coords.reserve(count * dim);
    let mut x = vec![0.0; dim];
    for _ in 0..count {
        for v in x.iter_mut() {
            *v = rng.random::<f64>();
        }
        let value = lambda(&x);
        if !(value >= 0.0 && value.is_finite()) {
            return Err(SimError::InvalidIntensity(value));
        }
        if value > lambda_max {
            return Err(SimError::BoundViolation {
                value,
                bound: lambda_max,
            });
        }
        if rng.random::<f64>() * lambda_max < value {
            out.coords.extend_from_slice(&x);
        }
    }
    Ok(out)
}

/// `exp(Y)` of a Gaussian random field sampled on a regular lattice with
/// nodes `k / (grid_res - 1)`, interpolated multilinearly in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LgcpField {
    dim: usize,
    grid_res: usize,
    /// Node values, first coordinate fastest.
    values: Vec<f64>,
}

impl LgcpField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid_res(&self) -> usize {
        self.grid_res
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multilinear interpolation of the node values.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let g = self.grid_res;
        let h = (g - 1) as f64;
        let mut base = Vec::with_capacity(self.dim);
        let mut frac = Vec::with_capacity(self.dim);
        for &v in x {
            let pos = (v.clamp(0.0, 1.0) * h).min(h);
            let i = (pos.floor() as usize).min(g - 2);
            base.push(i);
            frac.push(pos - i as f64);
        }
        let mut total = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut off = 0;
            let mut stride = 1;
            for k in 0..self.dim {
                let bit = (corner >> k) & 1;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                off += (base[k] + bit) * stride;
                stride *= g;
            }
            if w != 0.0 {
                total += w * self.values[off];
            }
        }
        total
    }
}

/// Default lattice resolution per axis for the LGCP field.
pub fn default_lgcp_grid_res(dim: usize) -> usize {
    match dim {
        0..=3 => 32,
        4 => 12,
        5 => {
            log::warn!("LGCP in D=5 uses a coarse 8-point lattice per axis");
            8
        }
        _ => {
            log::warn!("LGCP in D={dim} uses a coarse 6-point lattice per axis");
            6
        }
    }
}

/// Cholesky factor of the 1-D RBF covariance on `grid_res` equispaced nodes,
/// with escalating diagonal jitter.
fn rbf_cholesky(grid_res: usize, lengthscale2: f64) -> Result<Matrix, SimError> {
    let h = 1.0 / (grid_res - 1) as f64;
    let cov = Matrix::from_fn(grid_res, grid_res, |i, j| {
        let d = (i as f64 - j as f64) * h;
        (-d * d / lengthscale2).exp()
    });
    let mut jitter = JITTER_START;
    loop {
        let mut c = cov.clone();
        for i in 0..grid_res {
            c[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(c) {
            return Ok(chol.l());
        }
        if jitter >= JITTER_MAX {
            return Err(SimError::Factorization(jitter));
        }
        jitter *= 10.0;
    }
}

/// Samples the random intensity `exp(Y)` of a log-Gaussian Cox process.
///
/// The RBF kernel factorizes over coordinates, so on a regular lattice the
/// covariance is a Kronecker product of 1-D covariances and the field is
/// drawn as `(L ⊗ .. ⊗ L) z`.
pub fn sample_lgcp_field<R: Rng + ?Sized>(
    lengthscale2: f64,
    grid_res: usize,
    dim: usize,
    rng: &mut R,
) -> Result<LgcpField, SimError> {
    if grid_res < 2 {
        return Err(SimError::InvalidParameter(format!(
            "grid_res must be at least 2, got {grid_res}"
        )));
    }
    if dim == 0 || !(lengthscale2 > 0.0) {
        return Err(SimError::InvalidParameter(
            "dimension and lengthscale must be positive".into(),
        ));
    }
    let nodes = (grid_res as f64).powi(dim as i32);
    if nodes > MAX_LGCP_NODES as f64 {
        return Err(SimError::ResourceGuard {
            requested: nodes,
            limit: MAX_LGCP_NODES,
        });
    }
    let l = rbf_cholesky(grid_res, lengthscale2)?;
    let dims = vec![grid_res; dim];
    let z: Vec<f64> = (0..nodes as usize)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let mut y = DenseTensor::from_vec(&dims, z).expect("dims are valid");
    for mode in 0..dim {
        y = mode_product(&y, &l, mode).expect("square factor matches mode size");
    }
    let values = y.into_data().into_iter().map(f64::exp).collect();
    Ok(LgcpField {
        dim,
        grid_res,
        values,
    })
}

/// Samples one LGCP realization: the field and a Poisson pattern given it.
pub fn sample_lgcp<R: Rng + ?Sized>(
    lengthscale2: f64,
    grid_res: usize,
    dim: usize,
    rng: &mut R,
) -> Result<(PointPattern, LgcpField), SimError> {
    let field = sample_lgcp_field(lengthscale2, grid_res, dim, rng)?;
    let pattern = sample_given_field(&field, rng)?;
    Ok((pattern, field))
}

/// Poisson pattern with the (fixed) intensity of `field`.
pub fn sample_given_field<R: Rng + ?Sized>(
    field: &LgcpField,
    rng: &mut R,
) -> Result<PointPattern, SimError> {
    let bound = field.max_value() * LGCP_SAFETY_FACTOR;
    sample_poisson(|x| field.eval(x), bound, field.dim, rng)
}

fn reflect_unit(mut y: f64) -> f64 {
    y = y.rem_euclid(2.0);
    if y > 1.0 {
        2.0 - y
    } else {
        y
    }
}

/// Neyman-Scott process: homogeneous Poisson parents of rate `parent_rate`,
/// `Poisson(offspring_mean)` offspring per parent displaced by an isotropic
/// Gaussian of standard deviation `kernel_sd`, reflected back into the cube.
pub fn sample_neyman_scott<R: Rng + ?Sized>(
    parent_rate: f64,
    offspring_mean: f64,
    kernel_sd: f64,
    dim: usize,
    rng: &mut R,
) -> Result<PointPattern, SimError> {
    if !(parent_rate >= 0.0 && parent_rate.is_finite())
        || !(offspring_mean >= 0.0 && offspring_mean.is_finite())
        || !(kernel_sd > 0.0 && kernel_sd.is_finite())
        || dim == 0
    {
        return Err(SimError::InvalidParameter(format!(
            "neyman-scott needs non-negative rates and positive sd, got ({parent_rate}, {offspring_mean}, {kernel_sd})"
        )));
    }
    let mut out = PointPattern::empty(dim);
    if parent_rate == 0.0 || offspring_mean == 0.0 {
        return Ok(out);
    }
    let parents = Poisson::new(parent_rate)
        .map_err(|e| SimError::InvalidParameter(e.to_string()))?
        .sample(rng) as usize;
    let offspring = Poisson::new(offspring_mean)
        .map_err(|e| SimError::InvalidParameter(e.to_string()))?;
    let kernel = Normal::new(0.0, kernel_sd).expect("sd checked positive");
    let mut centre = vec![0.0; dim];
    for _ in 0..parents {
        for c in centre.iter_mut() {
            *c = rng.random::<f64>();
        }
        let k = offspring.sample(rng) as usize;
        for _ in 0..k {
            for &c in &centre {
                out.coords.push(reflect_unit(c + kernel.sample(rng)));
            }
        }
    }
    Ok(out)
}

/// Assigns every point independently and uniformly to one of `parts`
/// patterns.
pub fn thin_split<R: Rng + ?Sized>(
    pattern: &PointPattern,
    parts: usize,
    rng: &mut R,
) -> Result<Vec<PointPattern>, SimError> {
    if parts < 2 {
        return Err(SimError::InvalidParameter(format!(
            "thin_split needs at least 2 parts, got {parts}"
        )));
    }
    let mut out = vec![PointPattern::empty(pattern.dim()); parts];
    for p in pattern.iter() {
        let k = rng.random_range(0..parts);
        out[k].coords.extend_from_slice(p);
    }
    Ok(out)
}
