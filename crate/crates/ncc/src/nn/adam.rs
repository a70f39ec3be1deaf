//! Adam optimizer over a flat parameter vector, with global gradient-norm
//! clipping applied before the moment updates.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global gradient-norm clip threshold; `None` disables clipping.
    pub clip_norm: Option<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, lr: f64, clip_norm: Option<f64>) -> Self {
        Self {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// One update step in place. `grads` is read-only; clipping rescales
    /// an internal copy when the global norm exceeds the threshold.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "adam: param count mismatch");
        assert_eq!(grads.len(), self.m.len(), "adam: grad count mismatch");

        let mut scale = 1.0;
        if let Some(clip) = self.clip_norm {
            let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > clip {
                scale = clip / norm;
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i] * scale;
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.epsilon);
        }
    }
}
