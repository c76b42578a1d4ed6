use thiserror::Error;

use crate::basis::BasisError;
use crate::estimate::EstimateError;
use crate::kie::KieError;
use crate::simulate::SimError;

#[derive(Error, Debug)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("truth has zero norm on the test grid")]
    ZeroReference,

    #[error(transparent)]
    Estimate(#[from] EstimateError),

    #[error(transparent)]
    Simulation(#[from] SimError),

    #[error(transparent)]
    Kernel(#[from] KieError),

    #[error(transparent)]
    Basis(#[from] BasisError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit status: 2 for configuration, 4 for resource limits and
    /// 3 for everything data or runtime related.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Resource(_) => 4,
            Self::Basis(BasisError::ResourceGuard { .. })
            | Self::Estimate(EstimateError::Basis(BasisError::ResourceGuard { .. }))
            | Self::Simulation(SimError::ResourceGuard { .. }) => 4,
            _ => 3,
        }
    }
}
