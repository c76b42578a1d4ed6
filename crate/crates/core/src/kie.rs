//! Multivariate Gaussian kernel intensity estimator with Scott's-rule
//! bandwidths.
//!
//! `lambda(x) = (1/n) sum_i sum_{u in N_i} prod_d phi((x_d - u_d) / h_d) / h_d`
//! with `phi` the standard normal density. There is no boundary correction,
//! so the estimate loses mass near the edges of the unit cube.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulate::PointPattern;

/// Bandwidth used for a coordinate with zero sample spread.
pub const BANDWIDTH_FLOOR: f64 = 1e-3;

/// Lattice points per parallel work item in [`KernelModel::evaluate_lattice`].
const LATTICE_CHUNK: usize = 256;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum KieError {
    #[error("no point patterns supplied")]
    NoPatterns,

    #[error("Scott's rule needs at least 2 pooled points, got {0}")]
    TooFewPoints(usize),

    #[error("pattern has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bandwidths must be positive and finite, got {0:?}")]
    InvalidBandwidth(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    dim: usize,
    /// Pooled points, row-major.
    points: Vec<f64>,
    bandwidths: Vec<f64>,
    /// `1 / n`, the number of processes.
    scale: f64,
}

fn pooled(patterns: &[PointPattern]) -> Result<(usize, Vec<f64>), KieError> {
    let dim = patterns.first().ok_or(KieError::NoPatterns)?.dim();
    let mut points = Vec::new();
    for p in patterns {
        if p.dim() != dim {
            return Err(KieError::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        points.extend_from_slice(p.coords());
    }
    Ok((dim, points))
}

/// Scott's rule `h_d = sd_d * N^(-1 / (D + 4))` on the pooled points, with
/// `sd_d` the sample standard deviation and `N` the pooled count.
pub fn scott_bandwidth(patterns: &[PointPattern]) -> Result<Vec<f64>, KieError> {
    let (dim, points) = pooled(patterns)?;
    let count = points.len() / dim;
    if count < 2 {
        return Err(KieError::TooFewPoints(count));
    }
    let factor = (count as f64).powf(-1.0 / (dim as f64 + 4.0));
    let mut out = Vec::with_capacity(dim);
    for d in 0..dim {
        let mean = points.iter().skip(d).step_by(dim).sum::<f64>() / count as f64;
        let ss: f64 = points
            .iter()
            .skip(d)
            .step_by(dim)
            .map(|v| (v - mean) * (v - mean))
            .sum();
        let h = (ss / (count - 1) as f64).sqrt() * factor;
        if h > 0.0 {
            out.push(h);
        } else {
            log::warn!("coordinate {d} has no spread; using bandwidth {BANDWIDTH_FLOOR}");
            out.push(BANDWIDTH_FLOOR);
        }
    }
    Ok(out)
}

impl KernelModel {
    /// Fits with Scott's-rule bandwidths.
    pub fn fit(patterns: &[PointPattern]) -> Result<Self, KieError> {
        let h = scott_bandwidth(patterns)?;
        Self::with_bandwidths(patterns, h)
    }

    pub fn with_bandwidths(patterns: &[PointPattern], bandwidths: Vec<f64>) -> Result<Self, KieError> {
        let (dim, points) = pooled(patterns)?;
        if bandwidths.len() != dim || bandwidths.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(KieError::InvalidBandwidth(bandwidths));
        }
        Ok(Self {
            dim,
            points,
            bandwidths,
            scale: 1.0 / patterns.len() as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn num_points(&self) -> usize {
        self.points.len() / self.dim
    }

    /// Total mass `N / n` over all of `R^D`.
    pub fn total_mass(&self) -> f64 {
        self.num_points() as f64 * self.scale
    }

    fn normalizer(&self) -> f64 {
        let prod_h: f64 = self.bandwidths.iter().product();
        self.scale / ((2.0 * PI).powf(self.dim as f64 / 2.0) * prod_h)
    }

    /// Estimate at `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let inv2h2: Vec<f64> = self.bandwidths.iter().map(|h| 0.5 / (h * h)).collect();
        let mut total = 0.0;
        for u in self.points.chunks_exact(self.dim) {
            let mut e = 0.0;
            for d in 0..self.dim {
                let z = x[d] - u[d];
                e += z * z * inv2h2[d];
            }
            total += (-e).exp();
        }
        total * self.normalizer()
    }

    /// Estimates on the lattice `axis^D`, first coordinate fastest.
    ///
    /// The kernel is a product over coordinates, so each data point adds the
    /// outer product of its per-axis kernel values; the result is exact.
    pub fn evaluate_lattice(&self, axis: &[f64]) -> Vec<f64> {
        let g = axis.len();
        let dim = self.dim;
        let total = g.pow(dim as u32);
        let inv2h2: Vec<f64> = self.bandwidths.iter().map(|h| 0.5 / (h * h)).collect();
        let chunks: Vec<&[f64]> = self.points.chunks(LATTICE_CHUNK * dim).collect();
        let partials: Vec<Vec<f64>> = chunks
            .par_iter()
            .map(|chunk| {
                let mut acc = vec![0.0; total];
                let mut outer = Vec::with_capacity(total);
                let mut k = vec![0.0; g];
                for u in chunk.chunks_exact(dim) {
                    outer.clear();
                    outer.push(1.0);
                    for d in 0..dim {
                        for (kv, &a) in k.iter_mut().zip(axis) {
                            let z = a - u[d];
                            *kv = (-z * z * inv2h2[d]).exp();
                        }
                        let prev = outer.len();
                        outer.resize(prev * g, 0.0);
                        for i in (0..g).rev() {
                            for r in (0..prev).rev() {
                                outer[i * prev + r] = outer[r] * k[i];
                            }
                        }
                    }
                    for (a, o) in acc.iter_mut().zip(&outer) {
                        *a += o;
                    }
                }
                acc
            })
            .collect();
        let norm = self.normalizer();
        let mut out = vec![0.0; total];
        for part in partials {
            for (o, v) in out.iter_mut().zip(part) {
                *o += v;
            }
        }
        for o in out.iter_mut() {
            *o *= norm;
        }
        out
    }
}
