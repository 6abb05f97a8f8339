//! ADAM with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use super::{NeuralError, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Moment accumulators, flattened in [`Parameters`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, num_params: usize) -> Result<Self, NeuralError> {
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = config;
        let valid = (0.0..1.0).contains(&beta1)
            && (0.0..1.0).contains(&beta2)
            && learning_rate >= 0.0
            && learning_rate.is_finite()
            && epsilon > 0.0;
        if !valid {
            return Err(NeuralError::Config(format!("invalid adam settings {config:?}")));
        }
        Ok(Self {
            config,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        })
    }

    /// One update: `theta -= lr * m_hat / (sqrt(v_hat) + eps)`.
    ///
    /// Rejects non-finite gradients before touching any state.
    pub fn update<P: Parameters + ?Sized>(
        &mut self,
        params: &mut P,
        grads: &P,
    ) -> Result<(), NeuralError> {
        let grad_tensors = grads.tensors();
        let total: usize = grad_tensors.iter().map(|t| t.len()).sum();
        if total != self.m.len() || params.num_params() != total {
            return Err(NeuralError::Shape(format!(
                "optimizer tracks {} parameters, got {total}",
                self.m.len()
            )));
        }
        if grad_tensors.iter().flat_map(|t| t.iter()).any(|g| !g.is_finite()) {
            return Err(NeuralError::NonFinite("gradient".into()));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);
        let mut offset = 0;
        for (theta, grad) in params.tensors_mut().into_iter().zip(grad_tensors) {
            for (k, (p, g)) in theta.iter_mut().zip(grad).enumerate() {
                let idx = offset + k;
                let m = beta1 * self.m[idx] + (1.0 - beta1) * g;
                let v = beta2 * self.v[idx] + (1.0 - beta2) * g * g;
                self.m[idx] = m;
                self.v[idx] = v;
                let m_hat = m / bias1;
                let v_hat = v / bias2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
            offset += grad.len();
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::update`].
pub fn adam_step<P: Parameters + ?Sized>(
    state: &mut AdamState,
    params: &mut P,
    grads: &P,
) -> Result<(), NeuralError> {
    state.update(params, grads)
}
