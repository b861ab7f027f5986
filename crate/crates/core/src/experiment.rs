//! Glue shared by the command line and the end-to-end tests: building the
//! training graph from a split, extracting queries, and scoring a policy.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::eval::{evaluate, rank_sources, BeamConfig, EvalError, EvaluationReport, RankedCandidates, Split};
use crate::kg::{EntityId, GraphError, KnowledgeGraph, RelationId, Triple};
use crate::policy::{PolicyError, PolicyNetwork};
use crate::rules::RuleSet;
use crate::scalar::Scalar;
use crate::training::Query;

/// Graph and query sets for one split.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Inverse-augmented graph with validation and test edges removed.
    pub graph: KnowledgeGraph,
    pub head_relation: RelationId,
    /// Head-relation edges that remain in `graph`.
    pub train: Vec<Query>,
    pub valid: Vec<Query>,
    pub test: Vec<Query>,
    /// Every known true pair, for filtered ranking.
    pub known: HashSet<Query>,
}

fn pairs<'a>(edges: impl Iterator<Item = &'a Triple>, rel: RelationId) -> Vec<Query> {
    edges
        .filter(|t| t.relation == rel)
        .map(|t| (t.head, t.tail))
        .collect()
}

/// `base` must not be augmented. Head-relation edges outside the split stay in
/// the training graph and act as training queries.
pub fn prepare(base: &KnowledgeGraph, split: &Split, head_relation: RelationId) -> Result<Prepared, GraphError> {
    let held_out: HashSet<Triple> = split.held_out().copied().collect();
    let graph = base.without_triples(&held_out)?.add_inverse_relations()?;
    let train = pairs(
        base.triples().iter().filter(|t| !held_out.contains(t)),
        head_relation,
    );
    let mut known: HashSet<Query> = pairs(base.triples().iter(), head_relation).into_iter().collect();
    known.extend(pairs(split.all(), head_relation));
    Ok(Prepared {
        graph,
        head_relation,
        train,
        valid: pairs(split.valid.iter(), head_relation),
        test: pairs(split.test.iter(), head_relation),
        known,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Decodes from every compound in `queries` and evaluates filtered ranks.
pub fn score_policy<F: Scalar>(
    prepared: &Prepared,
    net: &PolicyNetwork<F>,
    rules: &RuleSet,
    beam: &BeamConfig,
    queries: &[Query],
) -> Result<(BTreeMap<EntityId, RankedCandidates>, EvaluationReport), ScoreError> {
    let sources: Vec<EntityId> = queries
        .iter()
        .map(|q| q.0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let rankings = rank_sources(&prepared.graph, net, rules, &sources, beam)?;
    let report = evaluate(&rankings, queries, &prepared.known)?;
    Ok((rankings, report))
}
