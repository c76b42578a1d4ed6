//! Low-rank matrix and tensor estimators for the intensity function of
//! multivariate spatial point processes.
//!
//! The intensity on `[0, 1]^D` is expanded in a tensor-product Legendre
//! basis with the coordinates grouped into `s` blocks. The empirical
//! coefficient tensor is denoised by soft singular-value thresholding when
//! `s = 2` and by HOSVD with tensor sketching when `s >= 3`. A Gaussian
//! kernel estimator, point process simulators and a benchmark harness are
//! included for comparison.
//!
//! ```
//! use lowrank_intensity::basis::PartitionSpec;
//! use lowrank_intensity::estimate::matrix_svt_estimate;
//! use lowrank_intensity::rng::seeded;
//! use lowrank_intensity::simulate::{sample_poisson, scenario_intensity, ScenarioSpec};
//!
//! let truth = scenario_intensity(ScenarioSpec::new(1, 2).unwrap()).unwrap();
//! let mut rng = seeded(7);
//! let patterns: Vec<_> = (0..50)
//!     .map(|_| sample_poisson(|x| truth.eval(x), truth.sup(), 2, &mut rng).unwrap())
//!     .collect();
//! let partition = PartitionSpec::new(vec![1, 1]).unwrap();
//! let model = matrix_svt_estimate(&patterns, &partition, 6, 1.0).unwrap();
//! let value = model.evaluate(&[0.25, 0.5]).unwrap();
//! assert!(value >= 0.0);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod estimate;
pub mod harness;
pub mod kie;
pub mod rng;
pub mod simulate;
pub mod tensor;

pub use basis::{IntensityModel, PartitionSpec};
pub use estimate::{EstimateError, EstimatorConfig, TuckerRank};
pub use harness::{BenchmarkConfig, GridSpec, HarnessError, IntensityFn};
pub use kie::KernelModel;
pub use simulate::{PointPattern, ScenarioSpec};
pub use tensor::{DenseTensor, Matrix};
