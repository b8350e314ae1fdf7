//! Opinion-dynamics models.
//!
//! [`FjModel`] is the synchronous Friedkin–Johnsen iteration
//! `x(k+1) = ΛW x(k) + (I − Λ)u`. [`GossipModel`] is its asynchronous
//! counterpart, where a single sampled edge `(i, j)` moves agent `i` to a
//! convex combination of its own opinion, the opinion of `j` and its
//! prejudice `u_i`. [`fj_to_gossip`] builds a gossip model whose expected
//! dynamics is a lazy version of a given FJ model.

pub(crate) mod fj;
pub(crate) mod gossip;
mod mapping;

pub use fj::{FjLimit, FjModel};
pub use gossip::{AffinePair, EdgeWeights, ExpectedDynamics, ExpectedLimit, GossipModel};
pub use mapping::{
    fj_to_gossip, lazy_fj_matrix, mapping_residuals, MappingResiduals, IDENTITY_TOL,
};

use thiserror::Error;

use crate::graph::GraphError;
use crate::linalg::LinalgError;

/// Threshold under which `h_m` counts as different from one.
pub const OPENNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("edge ({0}, {1}) is not in the graph")]
    EdgeNotInGraph(usize, usize),
    #[error("mapping degenerate at agent {agent}: {reason}")]
    MappingDegenerate { agent: usize, reason: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl ModelError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), ModelError> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
