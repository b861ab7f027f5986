use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use serde::Serialize;

use crate::kg::{EntityId, KnowledgeGraph};
use crate::training::Query;

use super::rank::RankedCandidates;
use super::EvalError;

/// Filtered rank of one test pair; `None` when the disease was not ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryRank {
    pub compound: u32,
    pub disease: u32,
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub queries: Vec<QueryRank>,
    pub hits_at_1: f64,
    pub hits_at_3: f64,
    pub hits_at_10: f64,
    pub mrr: f64,
    /// Run description (mode, seed, checkpoint hash, ...), written verbatim.
    pub metadata: BTreeMap<String, String>,
}

/// Rank of `target` among `ranked` after removing every entity in `filtered`
/// other than `target` itself.
pub fn filtered_rank(
    ranked: &RankedCandidates,
    target: EntityId,
    filtered: &HashSet<EntityId>,
) -> Option<usize> {
    let mut rank = 0;
    for e in ranked.entities() {
        if e == target {
            return Some(rank + 1);
        }
        if !filtered.contains(&e) {
            rank += 1;
        }
    }
    None
}

/// Filtered hits@1/3/10 and MRR over `truth`. `rankings` is keyed by query
/// compound; `known` holds every true pair, used for filtering. A compound
/// with no ranking, or a disease missing from its ranking, scores zero.
pub fn evaluate(
    rankings: &BTreeMap<EntityId, RankedCandidates>,
    truth: &[Query],
    known: &HashSet<Query>,
) -> Result<EvaluationReport, EvalError> {
    let compounds: HashSet<EntityId> = truth.iter().map(|q| q.0).collect();
    if let Some(c) = rankings.keys().find(|c| !compounds.contains(c)) {
        return Err(EvalError::QueryNotInTruth(c.0));
    }
    let mut by_compound: BTreeMap<EntityId, HashSet<EntityId>> = BTreeMap::new();
    for &(c, d) in known {
        by_compound.entry(c).or_default().insert(d);
    }
    let empty_ranking = RankedCandidates::default();
    let empty_set = HashSet::new();
    let mut queries = Vec::with_capacity(truth.len());
    let (mut h1, mut h3, mut h10, mut rr) = (0usize, 0usize, 0usize, 0.0f64);
    for &(c, d) in truth {
        let ranked = rankings.get(&c).unwrap_or(&empty_ranking);
        let rank = filtered_rank(ranked, d, by_compound.get(&c).unwrap_or(&empty_set));
        if let Some(r) = rank {
            h1 += usize::from(r <= 1);
            h3 += usize::from(r <= 3);
            h10 += usize::from(r <= 10);
            rr += 1.0 / r as f64;
        }
        queries.push(QueryRank {
            compound: c.0,
            disease: d.0,
            rank,
        });
    }
    let n = truth.len().max(1) as f64;
    Ok(EvaluationReport {
        queries,
        hits_at_1: h1 as f64 / n,
        hits_at_3: h3 as f64 / n,
        hits_at_10: h10 as f64 / n,
        mrr: rr / n,
        metadata: BTreeMap::new(),
    })
}

impl EvaluationReport {
    pub fn ranked_queries(&self) -> usize {
        self.queries.iter().filter(|q| q.rank.is_some()).count()
    }

    fn metrics(&self) -> [(&'static str, f64); 4] {
        [
            ("hits_at_1", self.hits_at_1),
            ("hits_at_3", self.hits_at_3),
            ("hits_at_10", self.hits_at_10),
            ("mrr", self.mrr),
        ]
    }

    /// Flat `key=value` block.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "{k}={v}");
        }
        let _ = writeln!(s, "queries={}", self.queries.len());
        let _ = writeln!(s, "ranked_queries={}", self.ranked_queries());
        for (k, v) in self.metrics() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (k, v) in self.metrics() {
            let _ = writeln!(s, "{k},{v}");
        }
        s
    }
}

/// Tab-separated rankings: compound, position, candidate, score, best walk.
pub fn rankings_tsv(kg: &KnowledgeGraph, rankings: &BTreeMap<EntityId, RankedCandidates>) -> String {
    let mut s = String::from("query_compound\trank\tdisease\tscore\tbest_path\n");
    for (c, ranked) in rankings {
        for (i, cand) in ranked.candidates.iter().enumerate() {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                kg.entity_name(*c),
                i + 1,
                kg.entity_name(cand.entity),
                cand.score,
                cand.best_path.display(kg)
            );
        }
    }
    s
}
