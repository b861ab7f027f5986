//! Rule confidence: the fraction of body instance paths whose endpoints are
//! linked by the head relation.
//!
//! Sampling is uniform over body instance paths. Suffix completion counts are
//! computed once per rule; the source is drawn proportionally to its number
//! of completions and each hop proportionally to the completions of the next
//! node, so every instance path has the same probability.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::kg::{EntityId, KnowledgeGraph};

use super::{Rule, RuleError};

/// `completions[k][v]`: number of ways to finish the body from node `v`
/// standing at body position `k`.
fn completion_counts(kg: &KnowledgeGraph, rule: &Rule) -> Vec<Vec<f64>> {
    let body = &rule.body;
    let n = kg.num_entities();
    let types = kg.entity_types();
    let len = body.len();
    let mut counts = vec![vec![0.0f64; n]; len + 1];
    for v in 0..n {
        if types[v] == body.types()[len] {
            counts[len][v] = 1.0;
        }
    }
    for k in (0..len).rev() {
        let rel = body.relations()[k];
        let ty = body.types()[k];
        let (before, after) = counts.split_at_mut(k + 1);
        let next = &after[0];
        for v in 0..n {
            if types[v] != ty {
                continue;
            }
            let mut total = 0.0;
            for &(r, t) in kg.neighbors(EntityId(v as u32)) {
                if r == rel {
                    total += next[t.index()];
                }
            }
            before[k][v] = total;
        }
    }
    counts
}

fn sample_endpoints(
    kg: &KnowledgeGraph,
    rule: &Rule,
    counts: &[Vec<f64>],
    source_dist: &WeightedIndex<f64>,
    sources: &[EntityId],
    rng: &mut ChaCha8Rng,
) -> (EntityId, EntityId) {
    let source = sources[source_dist.sample(rng)];
    let mut node = source;
    let mut cands: Vec<EntityId> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (k, &rel) in rule.body.relations().iter().enumerate() {
        cands.clear();
        weights.clear();
        for &(r, t) in kg.neighbors(node) {
            if r == rel {
                let w = counts[k + 1][t.index()];
                if w > 0.0 {
                    cands.push(t);
                    weights.push(w);
                }
            }
        }
        let dist = WeightedIndex::new(&weights).expect("positive completion count");
        node = cands[dist.sample(rng)];
    }
    (source, node)
}

/// Monte Carlo confidence from `n_samples` body instance paths.
pub fn estimate_confidence(
    kg: &KnowledgeGraph,
    rule: &Rule,
    n_samples: usize,
    seed: u64,
) -> Result<f64, RuleError> {
    if n_samples == 0 {
        return Err(RuleError::ZeroSamples);
    }
    let counts = completion_counts(kg, rule);
    let mut sources = Vec::new();
    let mut weights = Vec::new();
    for (v, &c) in counts[0].iter().enumerate() {
        if c > 0.0 {
            sources.push(EntityId(v as u32));
            weights.push(c);
        }
    }
    if sources.is_empty() {
        return Err(RuleError::UnrealizableBody(rule.body.display(kg)));
    }
    let source_dist = WeightedIndex::new(&weights).expect("positive weights");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let (s, t) = sample_endpoints(kg, rule, &counts, &source_dist, &sources, &mut rng);
        if kg.has_edge(s, rule.head.relation, t) {
            hits += 1;
        }
    }
    Ok(hits as f64 / n_samples as f64)
}

/// Exact body and rule support, counted over instance paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub body_paths: f64,
    pub rule_paths: f64,
}

impl Support {
    pub fn confidence(&self) -> f64 {
        if self.body_paths == 0.0 {
            0.0
        } else {
            self.rule_paths / self.body_paths
        }
    }
}

/// Propagates per-source path counts along the body. Cost grows with the
/// number of distinct endpoints per source, so intended for small graphs.
pub fn exact_support(kg: &KnowledgeGraph, rule: &Rule) -> Support {
    let body = &rule.body;
    let mut body_paths = 0.0;
    let mut rule_paths = 0.0;
    for source in kg.entities_of_type(body.source_type()) {
        let mut frontier: HashMap<EntityId, f64> = HashMap::from([(source, 1.0)]);
        for (k, &rel) in body.relations().iter().enumerate() {
            let ty = body.types()[k + 1];
            let mut next: HashMap<EntityId, f64> = HashMap::new();
            for (&v, &c) in &frontier {
                for &(r, t) in kg.neighbors(v) {
                    if r == rel && kg.entity_types()[t.index()] == ty {
                        *next.entry(t).or_insert(0.0) += c;
                    }
                }
            }
            frontier = next;
        }
        for (&t, &c) in &frontier {
            body_paths += c;
            if kg.has_edge(source, rule.head.relation, t) {
                rule_paths += c;
            }
        }
    }
    Support {
        body_paths,
        rule_paths,
    }
}
