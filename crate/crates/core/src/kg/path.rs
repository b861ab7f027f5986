use super::graph::{Action, KnowledgeGraph};
use super::vocab::{EntityId, RelationId};

/// A walk `e₁ -r₁-> e₂ … -r_T-> e_{T+1}`; STAY steps repeat the entity and
/// carry the graph's reserved relation id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstancePath {
    pub entities: Vec<EntityId>,
    pub relations: Vec<RelationId>,
}

impl InstancePath {
    pub fn start(source: EntityId) -> Self {
        Self {
            entities: vec![source],
            relations: Vec::new(),
        }
    }

    pub fn push(&mut self, action: Action) {
        self.relations.push(action.relation);
        self.entities.push(action.target);
    }

    pub fn source(&self) -> EntityId {
        self.entities[0]
    }

    pub fn last(&self) -> EntityId {
        *self.entities.last().expect("path has at least one entity")
    }

    /// Number of steps, STAY included.
    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = (EntityId, RelationId, EntityId)> + '_ {
        self.relations
            .iter()
            .enumerate()
            .map(move |(i, &r)| (self.entities[i], r, self.entities[i + 1]))
    }

    /// Arrow notation, e.g. `A -[binds]-> B -[STAY]-> B`.
    pub fn display(&self, kg: &KnowledgeGraph) -> String {
        let mut s = kg.entity_name(self.entities[0]).to_owned();
        for (_, r, t) in self.steps() {
            s.push_str(" -[");
            s.push_str(kg.relation_name(r));
            s.push_str("]-> ");
            s.push_str(kg.entity_name(t));
        }
        s
    }
}
