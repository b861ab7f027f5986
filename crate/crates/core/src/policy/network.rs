use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kg::{Action, EntityId};
use crate::scalar::Scalar;
use crate::tensor::{dot, Tensor};

use super::lstm::{cell_forward, CellCache, LstmLayer};
use super::PolicyError;

/// Network dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// Width `d` of entity and relation embeddings; actions are `2d` wide.
    pub embedding_dim: usize,
    pub hidden_size: usize,
    pub mlp_size: usize,
    pub layers: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 64,
            hidden_size: 128,
            mlp_size: 128,
            layers: 2,
        }
    }
}

impl PolicyConfig {
    pub fn action_dim(&self) -> usize {
        2 * self.embedding_dim
    }

    /// Encoder input: previous action embedding followed by the source entity.
    pub fn encoder_input_dim(&self) -> usize {
        3 * self.embedding_dim
    }
}

/// Embedding tables, recurrent history encoder and the two projections that
/// score admissible actions.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNetwork<F> {
    pub(crate) config: PolicyConfig,
    pub(crate) entity: Tensor<F>,
    /// One row per relation label plus a final row for STAY.
    pub(crate) relation: Tensor<F>,
    pub(crate) layers: Vec<LstmLayer<F>>,
    pub(crate) w1: Tensor<F>,
    pub(crate) w2: Tensor<F>,
    pub(crate) version: u64,
}

fn uniform<F: Scalar>(rows: usize, cols: usize, fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor<F> {
    let a = 1.0 / (fan_in as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| F::from_f64_lossy(rng.gen_range(-a..a)))
        .collect();
    Tensor::from_vec(rows, cols, data)
}

impl<F: Scalar> PolicyNetwork<F> {
    /// Fan-in scaled uniform weights, zero biases except forget gates at one.
    /// `relation_rows` must include the STAY row.
    pub fn init(
        config: PolicyConfig,
        num_entities: usize,
        relation_rows: usize,
        seed: u64,
    ) -> Result<Self, PolicyError> {
        let dims = [
            ("embedding_dim", config.embedding_dim),
            ("hidden_size", config.hidden_size),
            ("mlp_size", config.mlp_size),
            ("layers", config.layers),
            ("entities", num_entities),
            ("relations", relation_rows),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(PolicyError::InvalidDimension(format!("{name} must be positive")));
        }
        let d = config.embedding_dim;
        let h = config.hidden_size;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entity = uniform(num_entities, d, d, &mut rng);
        let relation = uniform(relation_rows, d, d, &mut rng);
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let input = if l == 0 { config.encoder_input_dim() } else { h };
            let weight = uniform(4 * h, input + h, input + h, &mut rng);
            let mut bias = Tensor::zeros(4 * h, 1);
            for v in &mut bias.data_mut()[h..2 * h] {
                *v = F::one();
            }
            layers.push(LstmLayer { weight, bias });
        }
        let w1 = uniform(config.mlp_size, h, h, &mut rng);
        let w2 = uniform(config.action_dim(), config.mlp_size, config.mlp_size, &mut rng);
        Ok(Self {
            config,
            entity,
            relation,
            layers,
            w1,
            w2,
            version: 0,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn num_entities(&self) -> usize {
        self.entity.rows()
    }

    pub fn relation_rows(&self) -> usize {
        self.relation.rows()
    }

    /// Incremented by every optimizer step.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn entity_embedding(&self, e: EntityId) -> &[F] {
        self.entity.row(e.index())
    }

    /// Named parameter tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor<F>)> {
        let mut out = vec![
            ("entity_embedding".to_owned(), &self.entity),
            ("relation_embedding".to_owned(), &self.relation),
        ];
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("lstm.{l}.weight"), &layer.weight));
            out.push((format!("lstm.{l}.bias"), &layer.bias));
        }
        out.push(("w1".to_owned(), &self.w1));
        out.push(("w2".to_owned(), &self.w2));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut out = vec![&mut self.entity, &mut self.relation];
        for layer in &mut self.layers {
            out.push(&mut layer.weight);
            out.push(&mut layer.bias);
        }
        out.push(&mut self.w1);
        out.push(&mut self.w2);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.all_finite())
    }

    /// Zeroed state at `source`, before any history has been encoded.
    pub fn initial_state(&self, source: EntityId) -> Result<AgentState<F>, PolicyError> {
        self.check_entity(source)?;
        let h = self.config.hidden_size;
        Ok(AgentState {
            current: source,
            source,
            hidden: vec![vec![F::zero(); h]; self.config.layers],
            cell: vec![vec![F::zero(); h]; self.config.layers],
            step: 0,
        })
    }

    fn check_entity(&self, e: EntityId) -> Result<(), PolicyError> {
        if e.index() < self.entity.rows() {
            Ok(())
        } else {
            Err(PolicyError::UnknownEntity(e.0))
        }
    }

    fn check_action(&self, a: &Action) -> Result<(), PolicyError> {
        self.check_entity(a.target)?;
        if a.relation.index() < self.relation.rows() {
            Ok(())
        } else {
            Err(PolicyError::UnknownRelation(a.relation.0))
        }
    }

    /// `[r; e_target; e_source]`, with the action half zeroed when there is no
    /// previous action.
    pub(crate) fn encoder_input(&self, source: EntityId, prev: Option<Action>) -> Vec<F> {
        let d = self.config.embedding_dim;
        let mut x = Vec::with_capacity(3 * d);
        match prev {
            Some(a) => {
                x.extend_from_slice(self.relation.row(a.relation.index()));
                x.extend_from_slice(self.entity.row(a.target.index()));
            }
            None => x.resize(2 * d, F::zero()),
        }
        x.extend_from_slice(self.entity.row(source.index()));
        x
    }

    pub(crate) fn encode_cached(
        &self,
        state: &AgentState<F>,
        prev: Option<Action>,
    ) -> Result<(AgentState<F>, Vec<CellCache<F>>), PolicyError> {
        let h = self.config.hidden_size;
        if state.hidden.len() != self.layers.len()
            || state.cell.len() != self.layers.len()
            || state.hidden.iter().chain(&state.cell).any(|v| v.len() != h)
        {
            return Err(PolicyError::DimensionMismatch(
                "agent state does not match the encoder".into(),
            ));
        }
        self.check_entity(state.source)?;
        if let Some(a) = &prev {
            self.check_action(a)?;
        }
        let mut x = self.encoder_input(state.source, prev);
        let mut caches = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let cache = cell_forward(layer, &x, &state.hidden[l], &state.cell[l]);
            x = cache.h.clone();
            caches.push(cache);
        }
        let next = AgentState {
            current: prev.map(|a| a.target).unwrap_or(state.current),
            source: state.source,
            hidden: caches.iter().map(|c| c.h.clone()).collect(),
            cell: caches.iter().map(|c| c.c.clone()).collect(),
            step: state.step + 1,
        };
        Ok((next, caches))
    }

    /// Feeds `[a_{t-1}; e_c]` through the encoder and moves the agent to the
    /// previous action's target. At the first step `prev` is `None` and the
    /// action half of the input is zero.
    pub fn encode_history(
        &self,
        state: &AgentState<F>,
        prev: Option<Action>,
    ) -> Result<AgentState<F>, PolicyError> {
        self.encode_cached(state, prev).map(|(s, _)| s)
    }

    /// `(u, relu(u), q)` with `u = W₁h` and `q = W₂ relu(u)`.
    pub(crate) fn project(&self, hidden: &[F]) -> (Vec<F>, Vec<F>, Vec<F>) {
        let mut u = vec![F::zero(); self.w1.rows()];
        self.w1.matvec(hidden, &mut u);
        let z: Vec<F> = u.iter().map(|&v| v.max(F::zero())).collect();
        let mut q = vec![F::zero(); self.w2.rows()];
        self.w2.matvec(&z, &mut q);
        (u, z, q)
    }

    pub(crate) fn action_logit(&self, q: &[F], a: &Action) -> F {
        let d = self.config.embedding_dim;
        dot(self.relation.row(a.relation.index()), &q[..d])
            + dot(self.entity.row(a.target.index()), &q[d..])
    }

    pub(crate) fn distribution_from_query(
        &self,
        q: &[F],
        actions: Vec<Action>,
    ) -> Result<ActionDistribution<F>, PolicyError> {
        if actions.is_empty() {
            return Err(PolicyError::EmptyActionSet);
        }
        for a in &actions {
            self.check_action(a)?;
        }
        let logits: Vec<F> = actions.iter().map(|a| self.action_logit(q, a)).collect();
        let (probs, log_probs) = log_softmax(&logits);
        Ok(ActionDistribution {
            actions,
            logits,
            probs,
            log_probs,
        })
    }

    /// `softmax(A_t · W₂ ReLU(W₁ h_t))` over the admissible `actions`, whose
    /// rows are `[r; e_target]`.
    pub fn action_distribution(
        &self,
        hidden: &[F],
        actions: Vec<Action>,
    ) -> Result<ActionDistribution<F>, PolicyError> {
        if hidden.len() != self.config.hidden_size {
            return Err(PolicyError::DimensionMismatch(format!(
                "hidden state has width {}, expected {}",
                hidden.len(),
                self.config.hidden_size
            )));
        }
        let (_, _, q) = self.project(hidden);
        self.distribution_from_query(&q, actions)
    }
}

/// Max-subtracted softmax; returns probabilities and log-probabilities.
pub(crate) fn log_softmax<F: Scalar>(logits: &[F]) -> (Vec<F>, Vec<F>) {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let sum: F = logits.iter().map(|&l| (l - max).exp()).sum();
    let lse = max + sum.ln();
    let log_probs: Vec<F> = logits.iter().map(|&l| l - lse).collect();
    let probs = log_probs.iter().map(|&l| l.exp()).collect();
    (probs, log_probs)
}

/// What the agent observes: current entity and source, plus its encoder
/// state. The query target never enters here.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState<F> {
    pub current: EntityId,
    pub source: EntityId,
    /// Per-layer hidden vectors; the last one feeds the action scorer.
    pub hidden: Vec<Vec<F>>,
    pub cell: Vec<Vec<F>>,
    pub step: usize,
}

impl<F> AgentState<F> {
    /// Top-layer hidden state `h_t`.
    pub fn output(&self) -> &[F] {
        self.hidden.last().expect("at least one layer")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution<F> {
    pub actions: Vec<Action>,
    pub logits: Vec<F>,
    pub probs: Vec<F>,
    pub log_probs: Vec<F>,
}

impl<F: Scalar> ActionDistribution<F> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> F {
        let mut h = F::zero();
        for (&p, &lp) in self.probs.iter().zip(&self.log_probs) {
            if p > F::zero() {
                h -= p * lp;
            }
        }
        h
    }
}

/// Draws an index from `dist` by inverse CDF. Zero-probability entries are
/// never returned.
pub fn sample_index<F: Scalar, R: Rng + ?Sized>(dist: &ActionDistribution<F>, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, p) in dist.probs.iter().enumerate() {
        let p = p.to_f64_lossy();
        if p <= 0.0 {
            continue;
        }
        last_positive = i;
        cum += p;
        if u < cum {
            return i;
        }
    }
    last_positive
}

/// Categorical draw; returns the action and its log-probability.
pub fn sample_action<F: Scalar, R: Rng + ?Sized>(
    dist: &ActionDistribution<F>,
    rng: &mut R,
) -> (Action, F) {
    let i = sample_index(dist, rng);
    (dist.actions[i], dist.log_probs[i])
}
