use serde::{Deserialize, Serialize};

use crate::basis::{IntensityModel, PartitionSpec};
use crate::estimate::{
    cluster_partition, default_gamma_grid, empirical_coefficients, fit, sigma1, cv_gamma,
    EstimatorConfig, GammaChoice, Method, RankChoice, DEFAULT_FOLDS, DEFAULT_GRID_SIZE,
    DEFAULT_TAU,
};
use crate::kie::KernelModel;
use crate::rng::substream;
use crate::simulate::{thin_split, PointPattern};

use super::metrics::{IntensityFn, Permuted};
use super::HarnessError;

/// Estimators the harness can run. `lowrank` picks soft-SVT for two blocks
/// and the tensor estimator for more.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    #[serde(rename = "lowrank")]
    LowRank,
    MatrixSvt,
    Tensor,
    Raw,
    Kie,
}

impl MethodKind {
    /// Name written to result files once the block count is known.
    pub fn label(self, s: usize) -> &'static str {
        match self {
            Self::LowRank if s == 2 => "matrix_svt",
            Self::LowRank => "tensor",
            Self::MatrixSvt => "matrix_svt",
            Self::Tensor if s == 2 => "matrix_svt",
            Self::Tensor => "tensor",
            Self::Raw => "raw",
            Self::Kie => "kie",
        }
    }

    pub fn uses_basis(self) -> bool {
        self != Self::Kie
    }

    pub fn is_low_rank(self) -> bool {
        matches!(self, Self::LowRank | Self::MatrixSvt | Self::Tensor)
    }
}

impl std::str::FromStr for MethodKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lowrank" => Ok(Self::LowRank),
            "matrix_svt" => Ok(Self::MatrixSvt),
            "tensor" => Ok(Self::Tensor),
            "raw" => Ok(Self::Raw),
            "kie" => Ok(Self::Kie),
            other => Err(HarnessError::Config(format!(
                "unknown method `{other}` (expected lowrank, matrix_svt, tensor, raw or kie)"
            ))),
        }
    }
}

/// How coordinates are grouped into blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    /// Correlation clustering of the observed coordinates.
    #[default]
    Cluster,
    /// Coordinates in their given order, split into near-equal blocks.
    Balanced,
}

/// Tuning shared by the basis estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOptions {
    pub s: usize,
    pub m: usize,
    pub tau: f64,
    pub folds: usize,
    pub sample_split: bool,
    /// Fixed soft-SVT threshold; cross-validated when absent.
    pub gamma: Option<f64>,
    pub partition: PartitionMode,
    /// Clip negative basis estimates at zero. Off by default so scores
    /// measure the raw L2 estimate.
    pub clip_negative: bool,
}

impl MethodOptions {
    pub fn new(s: usize, m: usize) -> Self {
        Self {
            s,
            m,
            tau: DEFAULT_TAU,
            folds: DEFAULT_FOLDS,
            sample_split: false,
            gamma: None,
            partition: PartitionMode::Cluster,
            clip_negative: false,
        }
    }
}

/// A fitted estimator of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Basis(Permuted<IntensityModel>),
    Kernel(KernelModel),
}

impl IntensityFn for Fitted {
    fn dim(&self) -> usize {
        match self {
            Self::Basis(b) => b.dim(),
            Self::Kernel(k) => IntensityFn::dim(k),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Basis(b) => b.value(x),
            Self::Kernel(k) => k.evaluate(x),
        }
    }

    fn lattice(&self, axis: &[f64]) -> Vec<f64> {
        match self {
            Self::Basis(b) => b.lattice(axis),
            Self::Kernel(k) => k.evaluate_lattice(axis),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub fitted: Fitted,
    pub label: &'static str,
    pub gamma: Option<f64>,
    pub ranks: Option<Vec<usize>>,
}

/// Fits one method to `patterns`. `seed` drives fold assignment and
/// sample splitting.
pub fn fit_method(
    patterns: &[PointPattern],
    kind: MethodKind,
    opts: &MethodOptions,
    seed: u64,
) -> Result<FitOutcome, HarnessError> {
    let dim = patterns
        .first()
        .map(|p| p.dim())
        .ok_or_else(|| HarnessError::Data("no point patterns".into()))?;
    if kind == MethodKind::Kie {
        return Ok(FitOutcome {
            fitted: Fitted::Kernel(KernelModel::fit(patterns)?),
            label: "kie",
            gamma: None,
            ranks: None,
        });
    }
    let s = opts.s;
    if s == 0 || s > dim {
        return Err(HarnessError::Config(format!("s = {s} is outside 1..={dim}")));
    }
    if kind.is_low_rank() && s < 2 {
        return Err(HarnessError::Config("low-rank estimators need s >= 2".into()));
    }
    if kind == MethodKind::MatrixSvt && s != 2 {
        return Err(HarnessError::Config(format!("matrix_svt needs s = 2, got {s}")));
    }
    let (permutation, partition) = match opts.partition {
        PartitionMode::Cluster => {
            let c = cluster_partition(patterns, s)?;
            (c.permutation, c.partition)
        }
        PartitionMode::Balanced => ((0..dim).collect(), PartitionSpec::balanced(dim, s)?),
    };
    let identity = permutation.iter().enumerate().all(|(k, &p)| k == p);
    let permuted: Vec<PointPattern>;
    let data: &[PointPattern] = if identity {
        patterns
    } else {
        permuted = patterns.iter().map(|p| p.permuted(&permutation)).collect();
        &permuted
    };
    let method = match kind {
        MethodKind::Raw => Method::Raw,
        MethodKind::MatrixSvt => Method::MatrixSvt,
        _ if s == 2 => Method::MatrixSvt,
        _ => Method::Tensor,
    };
    let gamma = match (method, opts.gamma) {
        (_, Some(g)) => GammaChoice::Fixed(g),
        (Method::MatrixSvt, None) if data.len() < opts.folds => {
            GammaChoice::Fixed(thinned_cv_gamma(data, &partition, opts, seed)?)
        }
        (_, None) => GammaChoice::CrossValidated {
            folds: opts.folds,
            grid: None,
        },
    };
    let config = EstimatorConfig {
        partition,
        m: opts.m,
        method,
        gamma,
        ranks: RankChoice::RatioThreshold(opts.tau),
        sample_split: opts.sample_split,
        seed,
    };
    let f = fit(data, &config)?;
    Ok(FitOutcome {
        fitted: Fitted::Basis(Permuted {
            inner: f.model.with_clipping(opts.clip_negative),
            permutation,
        }),
        label: kind.label(s),
        gamma: f.gamma,
        ranks: f.ranks.map(|r| r.ranks().to_vec()),
    })
}

/// Cross-validation when there are fewer processes than folds: all points
/// are thinned into `folds` independent pseudo-processes, each carrying
/// `n * lambda / folds`, and the chosen threshold is rescaled to the
/// `lambda` scale of the full-data fit.
fn thinned_cv_gamma(
    patterns: &[PointPattern],
    partition: &PartitionSpec,
    opts: &MethodOptions,
    seed: u64,
) -> Result<f64, HarnessError> {
    let k = opts.folds;
    let dim = partition.dim();
    let mut pseudo = vec![Vec::new(); k];
    for (i, p) in patterns.iter().enumerate() {
        let parts = thin_split(p, k, &mut substream(seed, &[i as u64, 0xF01D]))?;
        for (j, part) in parts.into_iter().enumerate() {
            pseudo[j].extend_from_slice(part.coords());
        }
    }
    let pseudo: Vec<PointPattern> = pseudo
        .into_iter()
        .map(|c| PointPattern::from_flat(dim, c))
        .collect::<Result<_, _>>()?;
    let bhat = empirical_coefficients(&pseudo, partition, opts.m)?;
    let grid = default_gamma_grid(sigma1(&bhat)?, DEFAULT_GRID_SIZE);
    let g = cv_gamma(&pseudo, partition, opts.m, &grid, k, seed)?;
    Ok(g * k as f64 / patterns.len() as f64)
}
