use std::collections::HashSet;

use super::error::GraphError;
use super::vocab::{inverse_name, EntityId, RelationId, TypeId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

/// One transition available to the walker. STAY uses the graph's reserved
/// relation id and targets the current node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub relation: RelationId,
    pub target: EntityId,
}

/// Typed directed multigraph with sorted per-entity adjacency.
///
/// Immutable once built. Inverse augmentation produces a new graph.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    vocab: Vocabulary,
    entity_types: Vec<TypeId>,
    triples: Vec<Triple>,
    offsets: Vec<usize>,
    adjacency: Vec<(RelationId, EntityId)>,
    base_relations: usize,
    augmented: bool,
}

impl KnowledgeGraph {
    /// Builds a graph from already-interned parts. Returns the graph and the
    /// number of duplicate triples dropped.
    pub fn from_parts(
        vocab: Vocabulary,
        entity_types: Vec<TypeId>,
        mut triples: Vec<Triple>,
    ) -> Result<(Self, usize), GraphError> {
        if entity_types.len() != vocab.entities.len() {
            return Err(GraphError::TypeTableSize {
                entities: vocab.entities.len(),
                types: entity_types.len(),
            });
        }
        let n = vocab.entities.len() as u32;
        let r = vocab.relations.len() as u32;
        for t in &triples {
            if t.head.0 >= n {
                return Err(GraphError::UnknownEntity(t.head.0));
            }
            if t.tail.0 >= n {
                return Err(GraphError::UnknownEntity(t.tail.0));
            }
            if t.relation.0 >= r {
                return Err(GraphError::UnknownRelationId(t.relation.0));
            }
        }
        let before = triples.len();
        triples.sort_unstable();
        triples.dedup();
        let duplicates = before - triples.len();
        let base_relations = vocab.relations.len();
        let (offsets, adjacency) = build_adjacency(vocab.entities.len(), &triples);
        Ok((
            Self {
                vocab,
                entity_types,
                triples,
                offsets,
                adjacency,
                base_relations,
                augmented: false,
            },
            duplicates,
        ))
    }

    /// Adds `(t, r⁻¹, h)` for every `(h, r, t)`. Inverse of relation `r` gets
    /// id `r + |R|` and name `r^-1`.
    pub fn add_inverse_relations(self) -> Result<Self, GraphError> {
        if self.augmented {
            return Err(GraphError::AlreadyAugmented);
        }
        let mut vocab = self.vocab;
        let base = vocab.relations.len();
        for r in 0..base as u32 {
            let name = inverse_name(vocab.relations.name(r).expect("relation id in range"));
            let id = vocab.relations.intern(&name);
            if id as usize != base + r as usize {
                // An input relation already carries the inverse name.
                return Err(GraphError::InverseNameClash(name));
            }
        }
        let mut triples = self.triples;
        let originals = triples.len();
        triples.reserve(originals);
        for i in 0..originals {
            let t = triples[i];
            triples.push(Triple::new(
                t.tail,
                RelationId(t.relation.0 + base as u32),
                t.head,
            ));
        }
        triples.sort_unstable();
        debug_assert!(triples.windows(2).all(|w| w[0] != w[1]));
        let (offsets, adjacency) = build_adjacency(vocab.entities.len(), &triples);
        Ok(Self {
            vocab,
            entity_types: self.entity_types,
            triples,
            offsets,
            adjacency,
            base_relations: base,
            augmented: true,
        })
    }

    /// A new un-augmented graph over the same vocabulary without `removed`.
    pub fn without_triples(&self, removed: &HashSet<Triple>) -> Result<Self, GraphError> {
        if self.augmented {
            return Err(GraphError::AlreadyAugmented);
        }
        let kept = self
            .triples
            .iter()
            .copied()
            .filter(|t| !removed.contains(t))
            .collect();
        let (g, _) = Self::from_parts(self.vocab.clone(), self.entity_types.clone(), kept)?;
        Ok(g)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn num_entities(&self) -> usize {
        self.entity_types.len()
    }

    /// Relation labels including inverses, excluding STAY.
    pub fn num_relations(&self) -> usize {
        self.vocab.relations.len()
    }

    pub fn num_edges(&self) -> usize {
        self.triples.len()
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    /// Reserved relation id for the STAY self-transition.
    pub fn stay_relation(&self) -> RelationId {
        RelationId(self.vocab.relations.len() as u32)
    }

    pub fn is_stay(&self, r: RelationId) -> bool {
        r == self.stay_relation()
    }

    pub fn inverse_of(&self, r: RelationId) -> Option<RelationId> {
        if !self.augmented {
            return None;
        }
        let b = self.base_relations as u32;
        match r.0 {
            x if x < b => Some(RelationId(x + b)),
            x if x < 2 * b => Some(RelationId(x - b)),
            _ => None,
        }
    }

    pub fn check_entity(&self, e: EntityId) -> Result<(), GraphError> {
        if e.index() < self.num_entities() {
            Ok(())
        } else {
            Err(GraphError::UnknownEntity(e.0))
        }
    }

    pub fn entity_type(&self, e: EntityId) -> Result<TypeId, GraphError> {
        self.entity_types
            .get(e.index())
            .copied()
            .ok_or(GraphError::UnknownEntity(e.0))
    }

    pub fn entity_types(&self) -> &[TypeId] {
        &self.entity_types
    }

    /// Outgoing `(relation, tail)` pairs of `e`, sorted.
    pub fn neighbors(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        &self.adjacency[self.offsets[e.index()]..self.offsets[e.index() + 1]]
    }

    pub fn has_edge(&self, head: EntityId, relation: RelationId, tail: EntityId) -> bool {
        head.index() < self.num_entities()
            && self.neighbors(head).binary_search(&(relation, tail)).is_ok()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.has_edge(t.head, t.relation, t.tail)
    }

    /// Outgoing edges of `current` plus STAY, minus `mask` and its inverse.
    /// Ordered by relation id then target id, STAY last.
    pub fn available_actions(
        &self,
        current: EntityId,
        mask: Option<&Triple>,
    ) -> Result<Vec<Action>, GraphError> {
        let mut out = Vec::new();
        self.available_actions_into(current, mask, &mut out)?;
        Ok(out)
    }

    pub fn available_actions_into(
        &self,
        current: EntityId,
        mask: Option<&Triple>,
        out: &mut Vec<Action>,
    ) -> Result<(), GraphError> {
        self.check_entity(current)?;
        out.clear();
        let forward = mask.filter(|m| m.head == current).map(|m| (m.relation, m.tail));
        let backward = mask
            .filter(|m| m.tail == current)
            .and_then(|m| self.inverse_of(m.relation).map(|inv| (inv, m.head)));
        for &(relation, target) in self.neighbors(current) {
            let pair = Some((relation, target));
            if pair == forward || pair == backward {
                continue;
            }
            out.push(Action { relation, target });
        }
        out.push(Action {
            relation: self.stay_relation(),
            target: current,
        });
        Ok(())
    }

    /// Number of entities of each type, indexed by type id.
    pub fn type_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.vocab.types.len()];
        for t in &self.entity_types {
            counts[t.index()] += 1;
        }
        counts
    }

    pub fn entities_of_type(&self, ty: TypeId) -> impl Iterator<Item = EntityId> + '_ {
        self.entity_types
            .iter()
            .enumerate()
            .filter(move |(_, &t)| t == ty)
            .map(|(i, _)| EntityId(i as u32))
    }

    pub fn relation_name(&self, r: RelationId) -> &str {
        if self.is_stay(r) {
            "STAY"
        } else {
            self.vocab.relation_name(r).unwrap_or("?")
        }
    }

    pub fn entity_name(&self, e: EntityId) -> &str {
        self.vocab.entity_name(e).unwrap_or("?")
    }
}

fn build_adjacency(n: usize, sorted: &[Triple]) -> (Vec<usize>, Vec<(RelationId, EntityId)>) {
    let mut offsets = vec![0usize; n + 1];
    for t in sorted {
        offsets[t.head.index() + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let adjacency = sorted.iter().map(|t| (t.relation, t.tail)).collect();
    (offsets, adjacency)
}
