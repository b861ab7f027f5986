//! Metapath rules: representation, rule files, path projection and matching,
//! and confidence estimation.

mod confidence;
mod metapath;
mod ruleset;

use thiserror::Error;

pub use confidence::{estimate_confidence, exact_support, Support};
pub use metapath::{metapath_of, Metapath};
pub use ruleset::{
    matches, parse_rules, rewrite_scores, rule_line, serialize_rules, HeadPattern, Rule,
    RuleFile, RuleLine, RuleSet,
};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule line {line}: {reason}")]
    MalformedRule { line: usize, reason: String },
    #[error("rule line {line}: score {score} is outside [0, 1]")]
    ScoreOutOfRange { line: usize, score: f64 },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("no instance path matches body `{0}`")]
    UnrealizableBody(String),
    #[error("sample count must be positive")]
    ZeroSamples,
}
