use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::policy::{accumulate_gradient, rollout, Gradients, PolicyConfig, PolicyNetwork, Trajectory};
use crate::rules::RuleSet;
use crate::scalar::Scalar;

use super::optim::{Adam, Baseline};
use super::reward::{compute_reward, rule_hit};
use super::TrainError;

/// Gradient accumulation is split into this many fixed chunks whatever the
/// thread count, so summation order (and hence every bit of the result)
/// does not depend on parallelism.
const GRAD_CHUNKS: usize = 8;

/// A `(compound, disease)` pair whose head edge the agent should recover.
pub type Query = (EntityId, EntityId);

/// Every knob of a training run. All keys have defaults; unknown keys are
/// rejected when parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub rollouts_per_query: usize,
    /// Queries per update.
    pub batch_size: usize,
    pub updates: usize,
    pub entropy_beta: f64,
    pub baseline_decay: f64,
    pub max_path_length: usize,
    pub lambda: f64,
    pub seed: u64,
    pub embedding_dim: usize,
    pub hidden_size: usize,
    pub mlp_size: usize,
    pub layers: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        let p = PolicyConfig::default();
        Self {
            learning_rate: 1e-3,
            rollouts_per_query: 40,
            batch_size: 8,
            updates: 3000,
            entropy_beta: 0.02,
            baseline_decay: 0.95,
            max_path_length: 3,
            lambda: 1.0,
            seed: 0,
            embedding_dim: p.embedding_dim,
            hidden_size: p.hidden_size,
            mlp_size: p.mlp_size,
            layers: p.layers,
        }
    }
}

impl TrainerConfig {
    pub fn policy(&self) -> PolicyConfig {
        PolicyConfig {
            embedding_dim: self.embedding_dim,
            hidden_size: self.hidden_size,
            mlp_size: self.mlp_size,
            layers: self.layers,
        }
    }

    pub fn validate(&self, rules: &RuleSet) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.rollouts_per_query == 0 || self.batch_size == 0 {
            return bad("rollouts_per_query and batch_size must be positive".into());
        }
        if !(self.entropy_beta >= 0.0 && self.entropy_beta.is_finite()) {
            return bad(format!("entropy_beta must be non-negative, got {}", self.entropy_beta));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return bad(format!("baseline_decay must lie in [0, 1), got {}", self.baseline_decay));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if self.max_path_length == 0 {
            return bad("max_path_length must be at least 1".into());
        }
        if self.max_path_length < rules.max_body_len() {
            return bad(format!(
                "max_path_length {} is shorter than the longest rule body ({})",
                self.max_path_length,
                rules.max_body_len()
            ));
        }
        let p = self.policy();
        if p.embedding_dim == 0 || p.hidden_size == 0 || p.mlp_size == 0 || p.layers == 0 {
            return bad("network dimensions must be positive".into());
        }
        Ok(())
    }
}

/// SplitMix64 finalizer over a combination of `base` and two counters.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: u64,
    pub mean_reward: f64,
    pub hit_fraction: f64,
    /// Share of hits whose walk matched a rule body.
    pub rule_match_fraction: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub loss: f64,
    pub mean_reward: f64,
}

/// One REINFORCE step on `batch`, which must carry rewards and come from
/// the current parameters. Minimizes
/// `(1/N) Σᵢ [−(Rᵢ − b) Σₜ log π(Aₜ) − β Σₜ H(dₜ)]`, then moves the baseline
/// toward the batch mean reward.
pub fn reinforce_update<F: Scalar>(
    kg: &KnowledgeGraph,
    net: &mut PolicyNetwork<F>,
    batch: &[Trajectory<F>],
    baseline: &mut Baseline,
    optimizer: &mut Adam<F>,
    entropy_beta: f64,
) -> Result<UpdateOutcome, TrainError> {
    let mut rewards = Vec::with_capacity(batch.len());
    for t in batch {
        if t.version() != net.version() {
            return Err(TrainError::StaleTrajectory {
                expected: net.version(),
                found: t.version(),
            });
        }
        rewards.push(t.reward().ok_or(TrainError::MissingReward)?);
    }
    if batch.is_empty() {
        return Ok(UpdateOutcome {
            loss: 0.0,
            mean_reward: 0.0,
        });
    }
    let n = batch.len() as f64;
    let b = baseline.value;
    let w_entropy = F::from_f64_lossy(-entropy_beta / n);
    let chunk = batch.len().div_ceil(GRAD_CHUNKS);
    let frozen: &PolicyNetwork<F> = net;
    let parts: Vec<(Gradients<F>, F)> = batch
        .par_chunks(chunk)
        .zip(rewards.par_chunks(chunk))
        .map(|(trajs, rs)| {
            let mut g = Gradients::zeros_like(frozen);
            let mut loss = F::zero();
            for (t, &r) in trajs.iter().zip(rs) {
                let w_log_prob = F::from_f64_lossy(-(r - b) / n);
                loss += accumulate_gradient(kg, frozen, t, w_log_prob, w_entropy, &mut g)?;
            }
            Ok((g, loss))
        })
        .collect::<Result<_, TrainError>>()?;
    let mut parts = parts.into_iter();
    let (mut grads, mut loss) = parts.next().expect("non-empty batch");
    for (g, l) in parts {
        grads.add_assign(&g);
        loss += l;
    }
    let step = optimizer.steps() + 1;
    if !loss.is_finite() {
        return Err(TrainError::NonFinite { what: "loss", step });
    }
    if !grads.all_finite() {
        return Err(TrainError::NonFinite { what: "gradient", step });
    }
    optimizer.step(net, &grads);
    if !net.all_finite() {
        return Err(TrainError::NonFinite { what: "parameters", step });
    }
    net.version += 1;
    let mean_reward = rewards.iter().sum::<f64>() / n;
    baseline.update(mean_reward);
    Ok(UpdateOutcome {
        loss: loss.to_f64_lossy(),
        mean_reward,
    })
}

/// Stateful training loop over a fixed query set.
pub struct Trainer<'a, F> {
    kg: &'a KnowledgeGraph,
    rules: &'a RuleSet,
    queries: Vec<Query>,
    head_relation: crate::kg::RelationId,
    config: TrainerConfig,
    net: PolicyNetwork<F>,
    optimizer: Adam<F>,
    baseline: Baseline,
    rng: ChaCha8Rng,
    step: u64,
}

impl<'a, F: Scalar> Trainer<'a, F> {
    /// `kg` must be inverse-augmented and must not contain held-out edges.
    pub fn new(
        kg: &'a KnowledgeGraph,
        rules: &'a RuleSet,
        queries: Vec<Query>,
        config: TrainerConfig,
    ) -> Result<Self, TrainError> {
        config.validate(rules)?;
        if queries.is_empty() {
            return Err(TrainError::EmptyQuerySet);
        }
        for &(c, d) in &queries {
            kg.check_entity(c).map_err(crate::policy::PolicyError::from)?;
            kg.check_entity(d).map_err(crate::policy::PolicyError::from)?;
        }
        let net = PolicyNetwork::init(
            config.policy(),
            kg.num_entities(),
            kg.num_relations() + 1,
            derive_seed(config.seed, u64::MAX, 0),
        )?;
        let optimizer = Adam::new(&net, config.learning_rate);
        Ok(Self {
            kg,
            rules,
            queries,
            head_relation: rules.head().relation,
            baseline: Baseline::new(config.baseline_decay),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, u64::MAX, 1)),
            config,
            net,
            optimizer,
            step: 0,
        })
    }

    pub fn network(&self) -> &PolicyNetwork<F> {
        &self.net
    }

    pub fn into_network(self) -> PolicyNetwork<F> {
        self.net
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn baseline(&self) -> f64 {
        self.baseline.value
    }

    /// Samples a query batch, rolls out against the frozen parameters and
    /// applies one update.
    pub fn step(&mut self) -> Result<LogRecord, TrainError> {
        let cfg = &self.config;
        let picks: Vec<Query> = (0..cfg.batch_size)
            .map(|_| self.queries[self.rng.gen_range(0..self.queries.len())])
            .collect();
        let k = cfg.rollouts_per_query;
        let step = self.step;
        let (kg, net, rules) = (self.kg, &self.net, self.rules);
        let (seed, steps, lambda, rel) = (cfg.seed, cfg.max_path_length, cfg.lambda, self.head_relation);
        let batch: Vec<(Trajectory<F>, bool)> = (0..picks.len() * k)
            .into_par_iter()
            .map(|i| {
                let (c, d) = picks[i / k];
                let mask = Triple::new(c, rel, d);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, step, i as u64));
                let mut t = rollout(kg, net, c, steps, Some(&mask), &mut rng)?.with_target(d);
                t.set_reward(compute_reward(&t, rules, lambda, kg))?;
                let matched = rule_hit(&t, rules, kg);
                Ok((t, matched))
            })
            .collect::<Result<_, TrainError>>()?;
        let hits = batch.iter().filter(|(t, _)| t.reward() > Some(0.0)).count();
        let matched = batch.iter().filter(|(_, m)| *m).count();
        let trajs: Vec<Trajectory<F>> = batch.into_iter().map(|(t, _)| t).collect();
        let outcome = reinforce_update(
            self.kg,
            &mut self.net,
            &trajs,
            &mut self.baseline,
            &mut self.optimizer,
            self.config.entropy_beta,
        )?;
        self.step += 1;
        Ok(LogRecord {
            step: self.step,
            mean_reward: outcome.mean_reward,
            hit_fraction: hits as f64 / trajs.len() as f64,
            rule_match_fraction: if hits == 0 {
                0.0
            } else {
                matched as f64 / hits as f64
            },
            loss: outcome.loss,
        })
    }
}

/// Runs `config.updates` steps, calling `on_step` after each, and returns the
/// trained network with its log.
pub fn train<F: Scalar>(
    kg: &KnowledgeGraph,
    rules: &RuleSet,
    queries: Vec<Query>,
    config: TrainerConfig,
    mut on_step: impl FnMut(&LogRecord),
) -> Result<(PolicyNetwork<F>, Vec<LogRecord>), TrainError> {
    let updates = config.updates;
    let mut trainer = Trainer::new(kg, rules, queries, config)?;
    let mut log = Vec::with_capacity(updates);
    for _ in 0..updates {
        let rec = trainer.step()?;
        on_step(&rec);
        log.push(rec);
    }
    Ok((trainer.into_network(), log))
}
