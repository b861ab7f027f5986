use std::fmt::Write;

use super::graph::KnowledgeGraph;
use super::vocab::{EntityId, RelationId, TypeId};

/// Exact counts over a stored graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStats {
    pub entities: usize,
    pub edges: usize,
    pub relations: usize,
    pub types: usize,
    pub augmented: bool,
    pub per_type: Vec<(String, usize)>,
    pub per_relation: Vec<(String, usize)>,
    /// Edge count of the designated head relation (e.g. `treats`), if present.
    pub head_relation: Option<(String, usize)>,
}

pub fn graph_stats(kg: &KnowledgeGraph, head_relation: &str) -> GraphStats {
    let vocab = kg.vocab();
    let per_type = kg
        .type_counts()
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            (
                vocab.type_name(TypeId(i as u32)).unwrap_or("?").to_owned(),
                c,
            )
        })
        .collect();
    let mut rel_counts = vec![0usize; kg.num_relations()];
    for t in kg.triples() {
        rel_counts[t.relation.index()] += 1;
    }
    let per_relation: Vec<(String, usize)> = rel_counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (kg.relation_name(RelationId(i as u32)).to_owned(), c))
        .collect();
    let head = per_relation
        .iter()
        .find(|(name, _)| name == head_relation)
        .cloned();
    GraphStats {
        entities: kg.num_entities(),
        edges: kg.num_edges(),
        relations: kg.num_relations(),
        types: vocab.types.len(),
        augmented: kg.is_augmented(),
        per_type,
        per_relation,
        head_relation: head,
    }
}

impl GraphStats {
    pub fn type_count(&self, name: &str) -> Option<usize> {
        self.per_type.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }

    /// Flat `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "entities={}", self.entities);
        let _ = writeln!(s, "edges={}", self.edges);
        let _ = writeln!(s, "relations={}", self.relations);
        let _ = writeln!(s, "types={}", self.types);
        let _ = writeln!(s, "augmented={}", self.augmented);
        for (n, c) in &self.per_type {
            let _ = writeln!(s, "type.{n}={c}");
        }
        for (n, c) in &self.per_relation {
            let _ = writeln!(s, "relation.{n}={c}");
        }
        if let Some((n, c)) = &self.head_relation {
            let _ = writeln!(s, "head_relation={n}");
            let _ = writeln!(s, "head_relation_edges={c}");
        }
        s
    }
}

/// Degree summary used by the CLI report; not part of [`GraphStats`] equality.
pub fn max_out_degree(kg: &KnowledgeGraph) -> usize {
    (0..kg.num_entities())
        .map(|i| kg.neighbors(EntityId(i as u32)).len())
        .max()
        .unwrap_or(0)
}
