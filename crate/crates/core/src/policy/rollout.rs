use rand::Rng;

use crate::kg::{Action, EntityId, InstancePath, KnowledgeGraph, Triple};
use crate::scalar::Scalar;

use super::network::{sample_index, PolicyNetwork};
use super::PolicyError;

/// One sampled walk together with what the update needs to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<F> {
    pub path: InstancePath,
    /// Index of the chosen action within each step's ordered action list.
    pub choices: Vec<usize>,
    pub log_probs: Vec<F>,
    pub entropies: Vec<F>,
    /// Edge hidden from the walker during the rollout.
    pub mask: Option<Triple>,
    /// Query answer `e_d`; never shown to the policy.
    pub target: Option<EntityId>,
    reward: Option<f64>,
    version: u64,
}

impl<F: Scalar> Trajectory<F> {
    pub fn source(&self) -> EntityId {
        self.path.source()
    }

    pub fn final_entity(&self) -> EntityId {
        self.path.last()
    }

    pub fn steps(&self) -> usize {
        self.path.len()
    }

    pub fn total_log_prob(&self) -> F {
        self.log_probs.iter().copied().sum()
    }

    /// Parameter version of the network that produced this walk.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn reward(&self) -> Option<f64> {
        self.reward
    }

    pub fn set_reward(&mut self, r: f64) -> Result<(), PolicyError> {
        if self.reward.is_some() {
            return Err(PolicyError::RewardAlreadySet);
        }
        self.reward = Some(r);
        Ok(())
    }

    pub fn with_target(mut self, target: EntityId) -> Self {
        self.target = Some(target);
        self
    }

    /// Builds a trajectory from an explicit walk, e.g. for testing reward
    /// code. Per-step probabilities are left at zero.
    pub fn from_path(path: InstancePath, target: Option<EntityId>) -> Self {
        let n = path.len();
        Self {
            path,
            choices: vec![0; n],
            log_probs: vec![F::zero(); n],
            entropies: vec![F::zero(); n],
            mask: None,
            target,
            reward: None,
            version: 0,
        }
    }
}

/// Samples a `steps`-long walk from `source`. STAY is always available, so
/// every rollout has exactly `steps` transitions.
pub fn rollout<F: Scalar, R: Rng + ?Sized>(
    kg: &KnowledgeGraph,
    net: &PolicyNetwork<F>,
    source: EntityId,
    steps: usize,
    mask: Option<&Triple>,
    rng: &mut R,
) -> Result<Trajectory<F>, PolicyError> {
    if steps == 0 {
        return Err(PolicyError::ZeroSteps);
    }
    kg.check_entity(source)?;
    let mut state = net.initial_state(source)?;
    let mut path = InstancePath::start(source);
    let mut choices = Vec::with_capacity(steps);
    let mut log_probs = Vec::with_capacity(steps);
    let mut entropies = Vec::with_capacity(steps);
    let mut prev: Option<Action> = None;
    let mut actions = Vec::new();
    for _ in 0..steps {
        state = net.encode_history(&state, prev)?;
        kg.available_actions_into(state.current, mask, &mut actions)?;
        let dist = net.action_distribution(state.output(), actions.clone())?;
        let i = sample_index(&dist, rng);
        let a = dist.actions[i];
        choices.push(i);
        log_probs.push(dist.log_probs[i]);
        entropies.push(dist.entropy());
        path.push(a);
        prev = Some(a);
    }
    Ok(Trajectory {
        path,
        choices,
        log_probs,
        entropies,
        mask: mask.copied(),
        target: None,
        reward: None,
        version: net.version(),
    })
}

/// Recomputes each step's log-probability through the public encoder and
/// scorer, independently of what the rollout recorded.
pub fn replay_log_probs<F: Scalar>(
    kg: &KnowledgeGraph,
    net: &PolicyNetwork<F>,
    path: &InstancePath,
    mask: Option<&Triple>,
) -> Result<Vec<F>, PolicyError> {
    let mut state = net.initial_state(path.source())?;
    let mut prev = None;
    let mut out = Vec::with_capacity(path.len());
    for (t, (_, r, tail)) in path.steps().enumerate() {
        state = net.encode_history(&state, prev)?;
        let actions = kg.available_actions(state.current, mask)?;
        let taken = Action {
            relation: r,
            target: tail,
        };
        let i = actions
            .iter()
            .position(|a| *a == taken)
            .ok_or_else(|| PolicyError::Replay(format!("step {t} is not an admissible action")))?;
        let dist = net.action_distribution(state.output(), actions)?;
        out.push(dist.log_probs[i]);
        prev = Some(taken);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::GraphBuilder;
    use crate::policy::PolicyConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy() -> KnowledgeGraph {
        let mut b = GraphBuilder::default();
        for (n, t) in [("c", "C"), ("g", "G"), ("d", "D"), ("lonely", "C")] {
            b.add_entity(n, t).unwrap();
        }
        b.add_triple("c", "binds", "g").unwrap();
        b.add_triple("g", "assoc", "d").unwrap();
        b.add_triple("c", "treats", "d").unwrap();
        b.build().unwrap().0.add_inverse_relations().unwrap()
    }

    fn net(kg: &KnowledgeGraph) -> PolicyNetwork<f64> {
        let cfg = PolicyConfig {
            embedding_dim: 3,
            hidden_size: 4,
            mlp_size: 5,
            layers: 2,
        };
        PolicyNetwork::init(cfg, kg.num_entities(), kg.num_relations() + 1, 9).unwrap()
    }

    #[test]
    fn three_steps_four_entities() {
        let kg = toy();
        let n = net(&kg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = rollout(&kg, &n, EntityId(0), 3, None, &mut rng).unwrap();
        assert_eq!(t.path.relations.len(), 3);
        assert_eq!(t.path.entities.len(), 4);
    }

    #[test]
    fn isolated_source_stays() {
        let kg = toy();
        let n = net(&kg);
        let lonely = kg.vocab().entity_id("lonely").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = rollout(&kg, &n, lonely, 3, None, &mut rng).unwrap();
        assert!(t.path.relations.iter().all(|&r| kg.is_stay(r)));
        assert_eq!(t.final_entity(), lonely);
        assert_eq!(t.total_log_prob(), 0.0);
    }

    #[test]
    fn seeded_rollouts_repeat() {
        let kg = toy();
        let n = net(&kg);
        let a = rollout(&kg, &n, EntityId(0), 3, None, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = rollout(&kg, &n, EntityId(0), 3, None, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn masked_edge_never_taken() {
        let kg = toy();
        let n = net(&kg);
        let treats = kg.vocab().relation_id("treats").unwrap();
        let mask = Triple::new(EntityId(0), treats, EntityId(2));
        let inv = kg.inverse_of(treats).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let t = rollout(&kg, &n, EntityId(0), 3, Some(&mask), &mut rng).unwrap();
            assert!(t.path.steps().all(|(h, r, tl)| {
                (h, r, tl) != (EntityId(0), treats, EntityId(2))
                    && (h, r, tl) != (EntityId(2), inv, EntityId(0))
            }));
        }
    }

    #[test]
    fn log_probs_replay() {
        let kg = toy();
        let n = net(&kg);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let t = rollout(&kg, &n, EntityId(0), 3, None, &mut rng).unwrap();
            let replayed = replay_log_probs(&kg, &n, &t.path, None).unwrap();
            let sum: f64 = replayed.iter().sum();
            assert!((sum - t.total_log_prob()).abs() <= 1e-10 * sum.abs().max(1.0));
        }
    }

    #[test]
    fn reward_assigned_once() {
        let mut t: Trajectory<f64> = Trajectory::from_path(InstancePath::start(EntityId(0)), None);
        t.set_reward(1.0).unwrap();
        assert!(matches!(t.set_reward(2.0), Err(PolicyError::RewardAlreadySet)));
        assert_eq!(t.reward(), Some(1.0));
    }

    #[test]
    fn zero_steps_rejected() {
        let kg = toy();
        let n = net(&kg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            rollout(&kg, &n, EntityId(0), 0, None, &mut rng),
            Err(PolicyError::ZeroSteps)
        ));
    }
}
