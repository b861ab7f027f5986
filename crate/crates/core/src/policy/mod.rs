//! The walking agent: embeddings, recurrent history encoder, action scoring,
//! sampling, rollouts and reverse-mode gradients over an unrolled walk.

mod grad;
mod lstm;
mod network;
mod rollout;

use thiserror::Error;

use crate::kg::GraphError;

pub use grad::{accumulate_gradient, trajectory_objective, Gradients};
pub use lstm::LstmLayer;
pub use network::{
    sample_action, sample_index, ActionDistribution, AgentState, PolicyConfig, PolicyNetwork,
};
pub use rollout::{replay_log_probs, rollout, Trajectory};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("action set is empty")]
    EmptyActionSet,
    #[error("unknown entity id {0}")]
    UnknownEntity(u32),
    #[error("unknown relation id {0}")]
    UnknownRelation(u32),
    #[error("path length must be at least 1")]
    ZeroSteps,
    #[error("trajectory reward was already assigned")]
    RewardAlreadySet,
    #[error("trajectory does not replay on this graph: {0}")]
    Replay(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
