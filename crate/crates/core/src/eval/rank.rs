use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kg::{EntityId, InstancePath, KnowledgeGraph, TypeId};
use crate::policy::{PolicyError, PolicyNetwork};
use crate::rules::RuleSet;
use crate::scalar::Scalar;
use crate::training::project;

use super::beam::{beam_search, Beam};

/// Which decoded walks may support a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    /// Every decoded walk.
    Full,
    /// Only walks whose metapath equals some rule body.
    Pruned,
}

/// How several walks ending at one entity combine into its score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Max,
    Sum,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    _ => Err(format!("unknown {} `{s}`", stringify!($ty))),
                }
            }
        }
    };
}

text_enum!(RankMode { Full => "full", Pruned => "pruned" });
text_enum!(Aggregation { Max => "max", Sum => "sum" });

#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub width: usize,
    pub steps: usize,
    pub mode: RankMode,
    pub aggregation: Aggregation,
    /// Only entities of this type are ranked.
    pub target_type: Option<TypeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub entity: EntityId,
    /// Aggregated path probability.
    pub score: f64,
    /// Most probable supporting walk.
    pub best_path: InstancePath,
}

/// Candidates for one query, best first, entities distinct.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedCandidates {
    pub candidates: Vec<Candidate>,
}

impl RankedCandidates {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.candidates.iter().map(|c| c.entity)
    }
}

/// Groups decoded walks by final entity and sorts by aggregated probability
/// (ties by entity id). Pruned mode first drops walks that match no rule.
pub fn rank_targets<F: Scalar>(
    kg: &KnowledgeGraph,
    beams: &[Beam<F>],
    rules: &RuleSet,
    mode: RankMode,
    aggregation: Aggregation,
    target_type: Option<TypeId>,
) -> RankedCandidates {
    let types = kg.entity_types();
    let mut groups: BTreeMap<EntityId, (f64, f64, &InstancePath)> = BTreeMap::new();
    for b in beams {
        let end = b.path.last();
        if target_type.is_some_and(|ty| types[end.index()] != ty) {
            continue;
        }
        if mode == RankMode::Pruned && !rules.any_match(&project(kg, &b.path)) {
            continue;
        }
        let p = b.log_prob.to_f64_lossy().exp();
        groups
            .entry(end)
            .and_modify(|(score, best, path)| {
                match aggregation {
                    Aggregation::Max => *score = score.max(p),
                    Aggregation::Sum => *score += p,
                }
                if p > *best {
                    *best = p;
                    *path = &b.path;
                }
            })
            .or_insert((p, p, &b.path));
    }
    let mut candidates: Vec<Candidate> = groups
        .into_iter()
        .map(|(entity, (score, _, path))| Candidate {
            entity,
            score,
            best_path: path.clone(),
        })
        .collect();
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.entity.cmp(&b.entity)));
    RankedCandidates { candidates }
}

/// Decodes and ranks every source in parallel; the result is keyed by source
/// and independent of the thread count.
pub fn rank_sources<F: Scalar>(
    kg: &KnowledgeGraph,
    net: &PolicyNetwork<F>,
    rules: &RuleSet,
    sources: &[EntityId],
    config: &BeamConfig,
) -> Result<BTreeMap<EntityId, RankedCandidates>, PolicyError> {
    sources
        .par_iter()
        .map(|&s| {
            let beams = beam_search(kg, net, s, config.width, config.steps, None)?;
            let ranked = rank_targets(kg, &beams, rules, config.mode, config.aggregation, config.target_type);
            Ok((s, ranked))
        })
        .collect()
}
