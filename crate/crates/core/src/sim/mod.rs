//! Seeded simulation of the gossip dynamics and Monte Carlo ergodicity
//! statistics.

mod ensemble;
mod rng;
mod trajectory;

pub use ensemble::{
    empirical_expected_matrix, fit_decay, run_ensemble, DecayFit, EnsembleConfig, EnsembleStats,
    ExpectationMode,
};
pub use rng::{sample_edge, EdgeSampler, RngStream};
pub use trajectory::{
    decade_checkpoints, run_fj_trajectory, run_trajectory, Sample, Storage, TailRange, Trajectory,
    TrajectoryConfig, FULL_STORAGE_LIMIT,
};

use thiserror::Error;

use crate::dynamics::ModelError;
use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("replicate {replicate} left the prejudice range: visited [{min}, {max}]")]
    BoundViolated { replicate: u64, min: f64, max: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(ModelError),
}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::AssumptionViolated(msg) => SimError::AssumptionViolated(msg),
            other => SimError::Model(other),
        }
    }
}

impl From<LinalgError> for SimError {
    fn from(e: LinalgError) -> Self {
        SimError::Model(ModelError::Linalg(e))
    }
}
