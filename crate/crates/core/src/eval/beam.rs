use std::cmp::Ordering;

use crate::kg::{Action, EntityId, InstancePath, KnowledgeGraph, Triple};
use crate::policy::{AgentState, PolicyError, PolicyNetwork};
use crate::scalar::Scalar;

/// A decoded walk and the sum of its step log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Beam<F> {
    pub path: InstancePath,
    pub log_prob: F,
}

/// Orders by score descending, then by the `(entity, relation)` sequence of
/// the walk so that equal scores resolve the same way on every run.
fn beam_order<F: Scalar>(a: (&InstancePath, F), b: (&InstancePath, F)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| path_key(a.0).cmp(path_key(b.0)))
}

fn path_key(p: &InstancePath) -> impl Iterator<Item = (EntityId, u32)> + '_ {
    p.entities[1..].iter().copied().zip(p.relations.iter().map(|r| r.0))
}

struct Partial<F> {
    path: InstancePath,
    log_prob: F,
    state: AgentState<F>,
}

/// Width-`width` beam over `steps` transitions from `source`. Returns at most
/// `width` walks, best first. When `width` is at least the number of
/// `steps`-long walks, nothing is pruned and the result is exhaustive.
pub fn beam_search<F: Scalar>(
    kg: &KnowledgeGraph,
    net: &PolicyNetwork<F>,
    source: EntityId,
    width: usize,
    steps: usize,
    mask: Option<&Triple>,
) -> Result<Vec<Beam<F>>, PolicyError> {
    if steps == 0 {
        return Err(PolicyError::ZeroSteps);
    }
    if width == 0 {
        return Err(PolicyError::InvalidDimension("beam width must be positive".into()));
    }
    kg.check_entity(source)?;
    let start = net.encode_history(&net.initial_state(source)?, None)?;
    let mut beams = vec![Partial {
        path: InstancePath::start(source),
        log_prob: F::zero(),
        state: start,
    }];
    let mut actions = Vec::new();
    for t in 0..steps {
        let mut expanded: Vec<(usize, Action, F)> = Vec::new();
        for (i, b) in beams.iter().enumerate() {
            kg.available_actions_into(b.state.current, mask, &mut actions)?;
            let dist = net.action_distribution(b.state.output(), actions.clone())?;
            for (a, lp) in dist.actions.iter().zip(&dist.log_probs) {
                expanded.push((i, *a, b.log_prob + *lp));
            }
        }
        let mut cands: Vec<(InstancePath, F, usize)> = expanded
            .into_iter()
            .map(|(i, a, lp)| {
                let mut p = beams[i].path.clone();
                p.push(a);
                (p, lp, i)
            })
            .collect();
        cands.sort_by(|a, b| beam_order((&a.0, a.1), (&b.0, b.1)));
        cands.truncate(width);
        let last = t + 1 == steps;
        beams = cands
            .into_iter()
            .map(|(path, log_prob, i)| {
                let a = Action {
                    relation: *path.relations.last().expect("extended"),
                    target: path.last(),
                };
                let state = if last {
                    beams[i].state.clone()
                } else {
                    net.encode_history(&beams[i].state, Some(a))?
                };
                Ok(Partial {
                    path,
                    log_prob,
                    state,
                })
            })
            .collect::<Result<_, PolicyError>>()?;
    }
    Ok(beams
        .into_iter()
        .map(|b| Beam {
            path: b.path,
            log_prob: b.log_prob,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::GraphBuilder;
    use crate::policy::PolicyConfig;

    fn setup() -> (KnowledgeGraph, PolicyNetwork<f64>) {
        let mut b = GraphBuilder::default();
        for (n, t) in [("a", "X"), ("b", "Y"), ("c", "Y"), ("d", "Z")] {
            b.add_entity(n, t).unwrap();
        }
        for (h, r, t) in [("a", "p", "b"), ("a", "p", "c"), ("b", "q", "d"), ("c", "q", "d")] {
            b.add_triple(h, r, t).unwrap();
        }
        let kg = b.build().unwrap().0.add_inverse_relations().unwrap();
        let cfg = PolicyConfig {
            embedding_dim: 3,
            hidden_size: 4,
            mlp_size: 4,
            layers: 1,
        };
        let net = PolicyNetwork::init(cfg, kg.num_entities(), kg.num_relations() + 1, 2).unwrap();
        (kg, net)
    }

    #[test]
    fn width_one_is_greedy() {
        let (kg, net) = setup();
        let beams = beam_search(&kg, &net, EntityId(0), 1, 3, None).unwrap();
        assert_eq!(beams.len(), 1);
        let mut state = net.initial_state(EntityId(0)).unwrap();
        let mut prev = None;
        let mut lp = 0.0;
        for t in 0..3 {
            state = net.encode_history(&state, prev).unwrap();
            let actions = kg.available_actions(state.current, None).unwrap();
            let d = net.action_distribution(state.output(), actions).unwrap();
            let best = (0..d.len())
                .max_by(|&i, &j| d.log_probs[i].partial_cmp(&d.log_probs[j]).unwrap().then(j.cmp(&i)))
                .unwrap();
            assert_eq!(beams[0].path.relations[t], d.actions[best].relation);
            lp += d.log_probs[best];
            prev = Some(d.actions[best]);
        }
        assert!((lp - beams[0].log_prob).abs() < 1e-12);
    }

    #[test]
    fn scores_non_increasing_and_deterministic() {
        let (kg, net) = setup();
        let a = beam_search(&kg, &net, EntityId(0), 5, 3, None).unwrap();
        let b = beam_search(&kg, &net, EntityId(0), 5, 3, None).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].log_prob >= w[1].log_prob));
    }

    #[test]
    fn zero_width_rejected() {
        let (kg, net) = setup();
        assert!(beam_search(&kg, &net, EntityId(0), 0, 3, None).is_err());
    }
}
