//! Low-rank estimators of the coefficient tensor: empirical coefficients,
//! soft-SVT for two blocks, HOSVD plus sketching for three or more, rank
//! selection, threshold cross-validation and coordinate clustering.

mod cluster;
mod coefficients;
mod cv;
mod lowrank;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{BasisError, IntensityModel, PartitionSpec};
use crate::simulate::{PointPattern, SimError};
use crate::tensor::{singular_values, DenseTensor, Matrix, TensorError};

pub use cluster::{cluster_partition, coordinate_correlation, Clustering};
pub use coefficients::empirical_coefficients;
pub use cv::{
    cv_gamma, cv_gamma_with_folds, default_gamma_grid, fold_assignment, theoretical_gamma,
    theoretical_m, DEFAULT_GRID_SIZE,
};
pub use lowrank::{
    matrix_svt_estimate, matrix_svt_from_coefficients, rank_from_singular_values, raw_estimate,
    select_ranks, sketched_factors, svt_coefficients, tensor_coefficients, tensor_estimate,
    TuckerRank,
};

/// Default singular-value ratio threshold for rank selection.
pub const DEFAULT_TAU: f64 = 2.0;

/// Default number of cross-validation folds.
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EstimateError {
    #[error("no point patterns supplied")]
    NoPatterns,

    #[error("pattern has dimension {got}, partition covers {expected} coordinates")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{method} cannot use a partition with {blocks} blocks")]
    WrongBlockCount { method: &'static str, blocks: usize },

    #[error("rank {rank} for mode {mode} exceeds the mode size {max}")]
    RankTooLarge { mode: usize, rank: usize, max: usize },

    #[error("cross-validation with {folds} folds needs at least {folds} processes, got {n}")]
    TooFewProcesses { n: usize, folds: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Basis(#[from] BasisError),

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error(transparent)]
    Simulation(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MatrixSvt,
    Tensor,
    Raw,
}

/// Soft-SVT threshold: fixed, or chosen by cross-validation over a grid
/// (log-spaced from the data when `grid` is `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaChoice {
    Fixed(f64),
    CrossValidated { folds: usize, grid: Option<Vec<f64>> },
}

/// Tucker ranks: fixed, or picked by the singular-value ratio rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankChoice {
    Fixed(TuckerRank),
    RatioThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub partition: PartitionSpec,
    pub m: usize,
    pub method: Method,
    pub gamma: GammaChoice,
    pub ranks: RankChoice,
    pub sample_split: bool,
    pub seed: u64,
}

impl EstimatorConfig {
    /// Cross-validated soft-SVT for two blocks and ratio-rule tensor ranks
    /// otherwise, without sample splitting.
    pub fn low_rank(partition: PartitionSpec, m: usize, seed: u64) -> Self {
        let method = if partition.num_blocks() == 2 {
            Method::MatrixSvt
        } else {
            Method::Tensor
        };
        Self {
            partition,
            m,
            method,
            gamma: GammaChoice::CrossValidated {
                folds: DEFAULT_FOLDS,
                grid: None,
            },
            ranks: RankChoice::RatioThreshold(DEFAULT_TAU),
            sample_split: false,
            seed,
        }
    }
}

/// A fitted model with the tuning values that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub model: IntensityModel,
    pub method: Method,
    pub gamma: Option<f64>,
    pub ranks: Option<TuckerRank>,
}

/// Fits the configured estimator. A tensor request on a two-block
/// partition runs the matrix estimator instead.
pub fn fit(patterns: &[PointPattern], config: &EstimatorConfig) -> Result<Fit, EstimateError> {
    let partition = &config.partition;
    let m = config.m;
    let mut method = config.method;
    if method == Method::Tensor && partition.num_blocks() == 2 {
        log::info!("two coordinate blocks: using the matrix estimator instead of the tensor one");
        method = Method::MatrixSvt;
    }
    match method {
        Method::Raw => Ok(Fit {
            model: raw_estimate(patterns, partition, m)?,
            method,
            gamma: None,
            ranks: None,
        }),
        Method::MatrixSvt => {
            if partition.num_blocks() != 2 {
                return Err(EstimateError::WrongBlockCount {
                    method: "matrix_svt",
                    blocks: partition.num_blocks(),
                });
            }
            let bhat = empirical_coefficients(patterns, partition, m)?;
            let gamma = match &config.gamma {
                GammaChoice::Fixed(g) => *g,
                GammaChoice::CrossValidated { folds, grid } => {
                    let grid = match grid {
                        Some(g) => g.clone(),
                        None => default_gamma_grid(sigma1(&bhat)?, DEFAULT_GRID_SIZE),
                    };
                    cv_gamma(patterns, partition, m, &grid, *folds, config.seed)?
                }
            };
            Ok(Fit {
                model: matrix_svt_from_coefficients(&bhat, partition, m, gamma)?,
                method,
                gamma: Some(gamma),
                ranks: None,
            })
        }
        Method::Tensor => {
            let ranks = match &config.ranks {
                RankChoice::Fixed(r) => r.clone(),
                RankChoice::RatioThreshold(tau) => {
                    select_ranks(&empirical_coefficients(patterns, partition, m)?, *tau)?
                }
            };
            let model = tensor_estimate(patterns, partition, m, &ranks, config.sample_split, config.seed)?;
            Ok(Fit {
                model,
                method,
                gamma: None,
                ranks: Some(ranks),
            })
        }
    }
}

/// Largest singular value of an order-2 coefficient tensor.
pub fn sigma1(bhat: &DenseTensor) -> Result<f64, EstimateError> {
    let m = Matrix::from_column_slice(bhat.dims()[0], bhat.dims()[1], bhat.data());
    Ok(singular_values(&m)?.first().copied().unwrap_or(0.0))
}
