use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::PartitionSpec;
use crate::estimate::{DEFAULT_FOLDS, DEFAULT_TAU};
use crate::simulate::{default_lgcp_grid_res, Scenario, ScenarioSpec, MAX_LGCP_NODES};

use super::fitting::{MethodKind, MethodOptions, PartitionMode};
use super::metrics::GridSpec;
use super::HarnessError;

fn default_reps() -> usize {
    20
}

fn default_n() -> usize {
    5000
}

fn default_methods() -> Vec<MethodKind> {
    vec![MethodKind::LowRank, MethodKind::Kie]
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

fn default_true() -> bool {
    true
}

fn default_train_fraction() -> f64 {
    0.75
}

fn default_repeats() -> usize {
    30
}

fn default_s() -> usize {
    2
}

fn default_m() -> usize {
    6
}

/// Simulation study configuration: a master seed and a list of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(default)]
    pub seed: u64,
    /// Monte Carlo replications per cell.
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Test lattice points per axis; 10 (6 for D >= 6) when absent.
    #[serde(default)]
    pub grid_points: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
    /// Write wall-clock seconds to the results file (0 otherwise, which
    /// makes the output byte-reproducible).
    #[serde(default = "default_true")]
    pub record_timing: bool,
    #[serde(rename = "cell")]
    pub cells: Vec<CellConfig>,
}

/// One (scenario, D, s, m) experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub scenario: u8,
    pub dim: usize,
    pub s: usize,
    pub m: usize,
    /// Processes per replication.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodKind>,
    /// Intensity multiplier for scenarios 1-3.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub sample_split: bool,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub partition: PartitionMode,
    /// Clip negative basis estimates at zero before scoring.
    #[serde(default)]
    pub clip_negative: bool,
    /// LGCP lattice resolution per axis (scenario 4 only).
    #[serde(default)]
    pub lgcp_grid_res: Option<usize>,
    /// Overrides the top-level replication count.
    #[serde(default)]
    pub reps: Option<usize>,
}

impl CellConfig {
    pub fn new(scenario: u8, dim: usize, s: usize, m: usize) -> Self {
        Self {
            scenario,
            dim,
            s,
            m,
            n: default_n(),
            methods: default_methods(),
            amplitude: 1.0,
            tau: DEFAULT_TAU,
            folds: DEFAULT_FOLDS,
            sample_split: false,
            gamma: None,
            partition: PartitionMode::Cluster,
            clip_negative: false,
            lgcp_grid_res: None,
            reps: None,
        }
    }

    pub fn scenario_spec(&self) -> Result<ScenarioSpec, HarnessError> {
        ScenarioSpec::new(self.scenario, self.dim)
            .and_then(|s| s.with_amplitude(self.amplitude))
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn options(&self) -> MethodOptions {
        MethodOptions {
            s: self.s,
            m: self.m,
            tau: self.tau,
            folds: self.folds,
            sample_split: self.sample_split,
            gamma: self.gamma,
            partition: self.partition,
            clip_negative: self.clip_negative,
        }
    }

    pub fn lgcp_res(&self) -> usize {
        self.lgcp_grid_res
            .unwrap_or_else(|| default_lgcp_grid_res(self.dim))
    }

    fn validate(&self, index: usize) -> Result<(), HarnessError> {
        let err = |msg: String| HarnessError::Config(format!("cell {index}: {msg}"));
        let spec = self.scenario_spec().map_err(|e| err(e.to_string()))?;
        if self.s == 0 || self.s > self.dim {
            return Err(err(format!("s = {} must be in 1..={}", self.s, self.dim)));
        }
        if self.m == 0 || self.n == 0 {
            return Err(err("m and n must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(err("no methods listed".into()));
        }
        for &k in &self.methods {
            if k.is_low_rank() && self.s < 2 {
                return Err(err(format!("{} needs s >= 2", k.label(self.s))));
            }
            if k == MethodKind::MatrixSvt && self.s != 2 {
                return Err(err("matrix_svt needs s = 2".into()));
            }
        }
        if !(self.tau > 1.0) {
            return Err(err(format!("tau must exceed 1, got {}", self.tau)));
        }
        if self.folds < 2 {
            return Err(err("folds must be at least 2".into()));
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(err(format!("gamma must be non-negative, got {g}")));
            }
        }
        if self.methods.iter().any(|k| k.uses_basis()) {
            PartitionSpec::balanced(self.dim, self.s)
                .and_then(|p| p.coefficient_dims(self.m))
                .map_err(|e| HarnessError::Resource(format!("cell {index}: {e}")))?;
        }
        if spec.scenario == Scenario::LogGaussianCox {
            let res = self.lgcp_res();
            let nodes = (res as f64).powi(self.dim as i32);
            if res < 2 {
                return Err(err("lgcp_grid_res must be at least 2".into()));
            }
            if nodes > MAX_LGCP_NODES as f64 {
                return Err(HarnessError::Resource(format!(
                    "cell {index}: LGCP lattice of {nodes} nodes exceeds {MAX_LGCP_NODES}; lower lgcp_grid_res"
                )));
            }
        }
        Ok(())
    }
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn grid_for(&self, dim: usize) -> Result<GridSpec, HarnessError> {
        GridSpec::new(
            self.grid_points.unwrap_or_else(|| GridSpec::default_points(dim)),
            dim,
        )
    }

    /// Checks every cell up front so infeasible runs fail before any work.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.cells.is_empty() {
            return Err(HarnessError::Config("no [[cell]] entries".into()));
        }
        if self.reps == 0 || self.cells.iter().any(|c| c.reps == Some(0)) {
            return Err(HarnessError::Config("reps must be positive".into()));
        }
        for (i, c) in self.cells.iter().enumerate() {
            c.validate(i)?;
            self.grid_for(c.dim)?;
        }
        Ok(())
    }
}

/// A method entry of the real-data comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareMethod {
    pub name: String,
    pub kind: MethodKind,
    #[serde(default = "default_s")]
    pub s: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub sample_split: bool,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub partition: PartitionMode,
    #[serde(default)]
    pub clip_negative: bool,
}

impl CompareMethod {
    pub fn new(name: &str, kind: MethodKind, s: usize, m: usize) -> Self {
        Self {
            name: name.to_string(),
            kind,
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

    pub fn options(&self) -> MethodOptions {
        MethodOptions {
            s: self.s,
            m: self.m,
            tau: self.tau,
            folds: self.folds,
            sample_split: self.sample_split,
            gamma: self.gamma,
            partition: self.partition,
            clip_negative: self.clip_negative,
        }
    }
}

/// Real-data comparison configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default)]
    pub seed: u64,
    /// CSV file, resolved relative to the config file.
    pub input: PathBuf,
    /// Coordinate columns; every numeric column when empty.
    #[serde(default)]
    pub columns: Vec<String>,
    /// Column splitting rows into separate processes.
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub grid_points: Option<usize>,
    #[serde(default)]
    pub threads: usize,
    #[serde(rename = "method")]
    pub methods: Vec<CompareMethod>,
}

impl CompareConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.input.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.input = dir.join(&cfg.input);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.methods.len() < 2 {
            return Err(HarnessError::Config("compare needs at least two methods".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(HarnessError::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.repeats == 0 {
            return Err(HarnessError::Config("repeats must be positive".into()));
        }
        Ok(())
    }
}
