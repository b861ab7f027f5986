use serde::{Deserialize, Serialize};

use crate::policy::{Gradients, PolicyNetwork};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Exponential moving average of batch-mean reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub value: f64,
    pub decay: f64,
}

impl Baseline {
    pub fn new(decay: f64) -> Self {
        Self { value: 0.0, decay }
    }

    pub fn update(&mut self, batch_mean: f64) {
        self.value = self.decay * self.value + (1.0 - self.decay) * batch_mean;
    }
}

/// Adaptive-moment optimizer over every parameter tensor. Minimizes.
#[derive(Debug, Clone)]
pub struct Adam<F> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<Tensor<F>>,
    v: Vec<Tensor<F>>,
    t: u64,
}

impl<F: Scalar> Adam<F> {
    pub fn new(net: &PolicyNetwork<F>, learning_rate: f64) -> Self {
        let zeros: Vec<Tensor<F>> = net
            .tensors()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.rows(), t.cols()))
            .collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one descent step along `grads`.
    pub fn step(&mut self, net: &mut PolicyNetwork<F>, grads: &Gradients<F>) {
        self.t += 1;
        let b1 = F::from_f64_lossy(self.beta1);
        let b2 = F::from_f64_lossy(self.beta2);
        let one = F::one();
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let step = F::from_f64_lossy(self.learning_rate * bc2.sqrt() / bc1);
        let eps = F::from_f64_lossy(self.epsilon * bc2.sqrt());
        let params = net.tensors_mut();
        for (k, (p, (_, g))) in params.into_iter().zip(grads.tensors()).enumerate() {
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            for (((p, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                *p -= step * *m / (v.sqrt() + eps);
            }
        }
    }
}
