use crate::kg::{InstancePath, KnowledgeGraph};
use crate::policy::Trajectory;
use crate::rules::{Metapath, RuleSet};
use crate::scalar::Scalar;

/// Metapath of a walk with STAY steps dropped. Edges are not re-validated:
/// walks produced by the agent only use existing edges.
pub(crate) fn project(kg: &KnowledgeGraph, path: &InstancePath) -> Metapath {
    let types = kg.entity_types();
    let mut ts = vec![types[path.source().index()]];
    let mut rs = Vec::with_capacity(path.len());
    for (_, r, t) in path.steps() {
        if !kg.is_stay(r) {
            rs.push(r);
            ts.push(types[t.index()]);
        }
    }
    Metapath::new(ts, rs)
}

/// Terminal reward `𝟙{e_{T+1} = e_d} · (1 + λ Σᵢ S(Mᵢ) 𝟙{P̃ = Mᵢ})`.
/// A trajectory without a query target earns nothing.
pub fn compute_reward<F: Scalar>(
    trajectory: &Trajectory<F>,
    rules: &RuleSet,
    lambda: f64,
    kg: &KnowledgeGraph,
) -> f64 {
    if trajectory.target != Some(trajectory.final_entity()) {
        return 0.0;
    }
    if lambda == 0.0 || rules.is_empty() {
        return 1.0;
    }
    1.0 + lambda * rules.score_sum(&project(kg, &trajectory.path))
}

/// Whether the walk reached its target along a rule body.
pub fn rule_hit<F: Scalar>(trajectory: &Trajectory<F>, rules: &RuleSet, kg: &KnowledgeGraph) -> bool {
    trajectory.target == Some(trajectory.final_entity())
        && rules.any_match(&project(kg, &trajectory.path))
}
