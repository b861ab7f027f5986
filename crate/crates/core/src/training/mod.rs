//! Rule-augmented terminal reward and REINFORCE optimization of the policy.

mod optim;
mod reward;
mod trainer;

use thiserror::Error;

use crate::policy::PolicyError;

pub use optim::{Adam, Baseline};
pub(crate) use reward::project;
pub use reward::{compute_reward, rule_hit};
pub use trainer::{
    derive_seed, reinforce_update, train, LogRecord, Query, Trainer, TrainerConfig, UpdateOutcome,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid trainer config: {0}")]
    InvalidConfig(String),
    #[error("no training queries")]
    EmptyQuerySet,
    #[error("trajectory was sampled under parameter version {found}, network is at {expected}")]
    StaleTrajectory { expected: u64, found: u64 },
    #[error("trajectory has no reward")]
    MissingReward,
    #[error("non-finite value in {what} at update {step}")]
    NonFinite { what: &'static str, step: u64 },
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
