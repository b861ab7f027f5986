//! Beam decoding, candidate ranking (full and rule-pruned), filtered
//! link-prediction metrics and the train/valid/test split.

mod beam;
mod metrics;
mod rank;
mod split;

use thiserror::Error;

pub use beam::{beam_search, Beam};
pub use metrics::{evaluate, filtered_rank, rankings_tsv, EvaluationReport, QueryRank};
pub use rank::{
    rank_sources, rank_targets, Aggregation, BeamConfig, Candidate, RankMode, RankedCandidates,
};
pub use split::Split;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("split line {line}: {reason}")]
    MalformedSplit { line: usize, reason: String },
    #[error("ranking for compound id {0} has no test pair")]
    QueryNotInTruth(u32),
    #[error("io: {0}")]
    Io(String),
}
