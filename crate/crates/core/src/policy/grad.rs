//! Reverse-mode gradients of the per-walk objective
//! `w_lp · Σₜ log π(Aₜ) + w_ent · Σₜ H(dₜ)`.
//!
//! The walk is replayed with activations cached, then gradients flow from the
//! logits back through the projections, the stacked recurrent cells (over
//! time) and into the embedding rows that fed each step.

use crate::kg::{Action, KnowledgeGraph};
use crate::scalar::Scalar;
use crate::tensor::{axpy, Tensor};

use super::lstm::{cell_backward, CellCache};
use super::network::PolicyNetwork;
use super::{PolicyError, Trajectory};

/// Parameter-shaped gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<F> {
    pub(crate) inner: PolicyNetwork<F>,
}

impl<F: Scalar> Gradients<F> {
    pub fn zeros_like(net: &PolicyNetwork<F>) -> Self {
        let mut inner = net.clone();
        for t in inner.tensors_mut() {
            t.fill_zero();
        }
        Self { inner }
    }

    /// Tensors in the network's parameter order.
    pub fn tensors(&self) -> Vec<(String, &Tensor<F>)> {
        self.inner.tensors()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<F>> {
        self.inner.tensors_mut()
    }

    pub fn add_assign(&mut self, other: &Gradients<F>) {
        for (a, (_, b)) in self.inner.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.data().iter().all(|v| v.is_zero()))
    }

    pub fn all_finite(&self) -> bool {
        self.inner.all_finite()
    }
}

struct StepCache<F> {
    prev: Option<Action>,
    cells: Vec<CellCache<F>>,
    u: Vec<F>,
    z: Vec<F>,
    q: Vec<F>,
    actions: Vec<Action>,
    probs: Vec<F>,
    log_probs: Vec<F>,
    chosen: usize,
}

fn forward_cached<F: Scalar>(
    kg: &KnowledgeGraph,
    net: &PolicyNetwork<F>,
    traj: &Trajectory<F>,
) -> Result<Vec<StepCache<F>>, PolicyError> {
    let mut state = net.initial_state(traj.source())?;
    let mut prev: Option<Action> = None;
    let mut steps = Vec::with_capacity(traj.steps());
    let mut actions = Vec::new();
    for (t, (_, relation, target)) in traj.path.steps().enumerate() {
        let (next, cells) = net.encode_cached(&state, prev)?;
        state = next;
        kg.available_actions_into(state.current, traj.mask.as_ref(), &mut actions)?;
        let taken = Action { relation, target };
        let chosen = match traj.choices.get(t) {
            Some(&i) if actions.get(i) == Some(&taken) => i,
            // STAY has the largest relation id, so the list is fully sorted
            _ => actions
                .binary_search(&taken)
                .map_err(|_| PolicyError::Replay(format!("step {t} is not an admissible action")))?,
        };
        let (u, z, q) = net.project(state.output());
        let dist = net.distribution_from_query(&q, actions.clone())?;
        steps.push(StepCache {
            prev,
            cells,
            u,
            z,
            q,
            actions: dist.actions,
            probs: dist.probs,
            log_probs: dist.log_probs,
            chosen,
        });
        prev = Some(taken);
    }
    Ok(steps)
}

fn step_entropy<F: Scalar>(probs: &[F], log_probs: &[F]) -> F {
    let mut h = F::zero();
    for (&p, &lp) in probs.iter().zip(log_probs) {
        if p > F::zero() {
            h -= p * lp;
        }
    }
    h
}

/// Forward-only value of the objective for one walk.
pub fn trajectory_objective<F: Scalar>(
    kg: &KnowledgeGraph,
    net: &PolicyNetwork<F>,
    traj: &Trajectory<F>,
    w_log_prob: F,
    w_entropy: F,
) -> Result<F, PolicyError> {
    let steps = forward_cached(kg, net, traj)?;
    Ok(steps
        .iter()
        .map(|s| w_log_prob * s.log_probs[s.chosen] + w_entropy * step_entropy(&s.probs, &s.log_probs))
        .sum())
}

/// Adds the gradient of the objective for `traj` to `grads` and returns the
/// objective value.
pub fn accumulate_gradient<F: Scalar>(
    kg: &KnowledgeGraph,
    net: &PolicyNetwork<F>,
    traj: &Trajectory<F>,
    w_log_prob: F,
    w_entropy: F,
    grads: &mut Gradients<F>,
) -> Result<F, PolicyError> {
    let steps = forward_cached(kg, net, traj)?;
    let d = net.config.embedding_dim;
    let hsz = net.config.hidden_size;
    let n_layers = net.layers.len();
    let g = &mut grads.inner;
    let mut objective = F::zero();

    let mut carry_h = vec![vec![F::zero(); hsz]; n_layers];
    let mut carry_c = vec![vec![F::zero(); hsz]; n_layers];
    let mut dq = vec![F::zero(); 2 * d];
    let mut dz = vec![F::zero(); net.config.mlp_size];
    let mut dh_top = vec![F::zero(); hsz];

    for s in steps.iter().rev() {
        let entropy = step_entropy(&s.probs, &s.log_probs);
        objective += w_log_prob * s.log_probs[s.chosen] + w_entropy * entropy;

        // logits
        dq.iter_mut().for_each(|v| *v = F::zero());
        for (j, a) in s.actions.iter().enumerate() {
            let p = s.probs[j];
            let indicator = if j == s.chosen { F::one() } else { F::zero() };
            let mut gj = w_log_prob * (indicator - p);
            if p > F::zero() {
                gj -= w_entropy * p * (s.log_probs[j] + entropy);
            }
            if gj.is_zero() {
                continue;
            }
            let r = a.relation.index();
            let e = a.target.index();
            axpy(gj, net.relation.row(r), &mut dq[..d]);
            axpy(gj, net.entity.row(e), &mut dq[d..]);
            axpy(gj, &s.q[..d], g.relation.row_mut(r));
            axpy(gj, &s.q[d..], g.entity.row_mut(e));
        }

        // projections
        g.w2.add_outer(&dq, &s.z);
        dz.iter_mut().for_each(|v| *v = F::zero());
        net.w2.matvec_t_acc(&dq, &mut dz);
        for (v, &u) in dz.iter_mut().zip(&s.u) {
            if u <= F::zero() {
                *v = F::zero();
            }
        }
        let top = &s.cells[n_layers - 1].h;
        g.w1.add_outer(&dz, top);
        dh_top.iter_mut().for_each(|v| *v = F::zero());
        net.w1.matvec_t_acc(&dz, &mut dh_top);

        // encoder, top layer down
        let mut from_above = dh_top.clone();
        for l in (0..n_layers).rev() {
            let mut dh = carry_h[l].clone();
            for (a, &b) in dh.iter_mut().zip(&from_above) {
                *a += b;
            }
            let (dx, dh_prev, dc_prev) =
                cell_backward(&net.layers[l], &s.cells[l], &dh, &carry_c[l], &mut g.layers[l]);
            carry_h[l] = dh_prev;
            carry_c[l] = dc_prev;
            from_above = dx;
        }

        // encoder input [r_prev; e_current; e_source]
        if let Some(prev) = s.prev {
            axpy(F::one(), &from_above[..d], g.relation.row_mut(prev.relation.index()));
            axpy(F::one(), &from_above[d..2 * d], g.entity.row_mut(prev.target.index()));
        }
        axpy(F::one(), &from_above[2 * d..], g.entity.row_mut(traj.source().index()));
    }
    Ok(objective)
}
