use crate::kg::{InstancePath, KnowledgeGraph, RelationId, TypeId};

use super::RuleError;

/// Type/relation skeleton `type₀ -rel₁-> type₁ … -rel_L-> type_L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Metapath {
    types: Vec<TypeId>,
    relations: Vec<RelationId>,
}

impl Metapath {
    pub fn new(types: Vec<TypeId>, relations: Vec<RelationId>) -> Self {
        assert_eq!(
            types.len(),
            relations.len() + 1,
            "metapath needs one more type than relations"
        );
        Self { types, relations }
    }

    pub fn types(&self) -> &[TypeId] {
        &self.types
    }

    pub fn relations(&self) -> &[RelationId] {
        &self.relations
    }

    /// Number of relations.
    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn source_type(&self) -> TypeId {
        self.types[0]
    }

    pub fn target_type(&self) -> TypeId {
        *self.types.last().expect("non-empty type sequence")
    }

    pub fn display(&self, kg: &KnowledgeGraph) -> String {
        let vocab = kg.vocab();
        let mut s = vocab.type_name(self.types[0]).unwrap_or("?").to_owned();
        for (r, t) in self.relations.iter().zip(&self.types[1..]) {
            s.push_str(" -[");
            s.push_str(kg.relation_name(*r));
            s.push_str("]-> ");
            s.push_str(vocab.type_name(*t).unwrap_or("?"));
        }
        s
    }
}

/// Projects an instance path onto its metapath. STAY steps are removed first.
pub fn metapath_of(kg: &KnowledgeGraph, path: &InstancePath) -> Result<Metapath, RuleError> {
    if path.entities.len() != path.relations.len() + 1 {
        return Err(RuleError::InvalidPath("entity/relation counts disagree".into()));
    }
    let first = path.entities[0];
    let mut types = vec![kg
        .entity_type(first)
        .map_err(|e| RuleError::InvalidPath(e.to_string()))?];
    let mut relations = Vec::with_capacity(path.relations.len());
    for (h, r, t) in path.steps() {
        if kg.is_stay(r) {
            if h != t {
                return Err(RuleError::InvalidPath(format!(
                    "STAY step moves from {} to {}",
                    kg.entity_name(h),
                    kg.entity_name(t)
                )));
            }
            continue;
        }
        if !kg.has_edge(h, r, t) {
            return Err(RuleError::InvalidPath(format!(
                "edge ({}, {}, {}) is not in the graph",
                kg.entity_name(h),
                kg.relation_name(r),
                kg.entity_name(t)
            )));
        }
        relations.push(r);
        types.push(kg.entity_type(t).map_err(|e| RuleError::InvalidPath(e.to_string()))?);
    }
    Ok(Metapath { types, relations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Action, GraphBuilder};

    fn graph() -> KnowledgeGraph {
        let mut b = GraphBuilder::default();
        b.add_entity("Sorafenib", "Compound").unwrap();
        b.add_entity("Liver Cancer", "Disease").unwrap();
        b.add_entity("Kidney Cancer", "Disease").unwrap();
        b.add_entity("AURKC", "Gene").unwrap();
        b.add_triple("Sorafenib", "treats", "Liver Cancer").unwrap();
        b.add_triple("Liver Cancer", "resembles", "Kidney Cancer").unwrap();
        b.add_triple("Sorafenib", "binds", "AURKC").unwrap();
        b.add_triple("Kidney Cancer", "associates", "AURKC").unwrap();
        b.build().unwrap().0.add_inverse_relations().unwrap()
    }

    fn step(kg: &KnowledgeGraph, rel: &str, target: &str) -> Action {
        Action {
            relation: kg.vocab().relation_id(rel).unwrap(),
            target: kg.vocab().entity_id(target).unwrap(),
        }
    }

    #[test]
    fn projects_example_path() {
        let kg = graph();
        let mut p = InstancePath::start(kg.vocab().entity_id("Sorafenib").unwrap());
        p.push(step(&kg, "treats", "Liver Cancer"));
        p.push(step(&kg, "resembles", "Kidney Cancer"));
        let m = metapath_of(&kg, &p).unwrap();
        assert_eq!(
            m.display(&kg),
            "Compound -[treats]-> Disease -[resembles]-> Disease"
        );
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn zero_edge_path_is_single_type() {
        let kg = graph();
        let p = InstancePath::start(kg.vocab().entity_id("AURKC").unwrap());
        let m = metapath_of(&kg, &p).unwrap();
        assert_eq!(m.len(), 0);
        assert_eq!(m.display(&kg), "Gene");
    }

    #[test]
    fn stay_steps_are_dropped() {
        let kg = graph();
        let g = kg.vocab().entity_id("AURKC").unwrap();
        let mut p = InstancePath::start(kg.vocab().entity_id("Sorafenib").unwrap());
        p.push(step(&kg, "binds", "AURKC"));
        p.push(Action {
            relation: kg.stay_relation(),
            target: g,
        });
        p.push(step(&kg, "associates^-1", "Kidney Cancer"));
        let m = metapath_of(&kg, &p).unwrap();
        assert_eq!(
            m.display(&kg),
            "Compound -[binds]-> Gene -[associates^-1]-> Disease"
        );
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn missing_edge_is_invalid() {
        let kg = graph();
        let mut p = InstancePath::start(kg.vocab().entity_id("Sorafenib").unwrap());
        p.push(step(&kg, "treats", "Kidney Cancer"));
        assert!(matches!(metapath_of(&kg, &p), Err(RuleError::InvalidPath(_))));
    }

    #[test]
    fn moving_stay_is_invalid() {
        let kg = graph();
        let mut p = InstancePath::start(kg.vocab().entity_id("Sorafenib").unwrap());
        p.push(Action {
            relation: kg.stay_relation(),
            target: kg.vocab().entity_id("AURKC").unwrap(),
        });
        assert!(matches!(metapath_of(&kg, &p), Err(RuleError::InvalidPath(_))));
    }
}
