//! Bias-corrected Adam over a [`ModelParams`] collection.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

/// First and second moments per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.numel()]).collect();
        Self {
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn matches(&self, params: &ModelParams) -> bool {
        self.m.len() == params.len()
            && self.v.len() == params.len()
            && params
                .iter()
                .zip(self.m.iter().zip(&self.v))
                .all(|(p, (m, v))| m.len() == p.numel() && v.len() == p.numel())
    }

    /// `v̂ = v / (1 − β₂ᵗ)` for tensor `i`.
    pub fn corrected_second_moment(&self, i: usize, beta2: f64) -> Vec<f64> {
        let c = 1.0 - beta2.powi(self.step as i32);
        self.v[i].iter().map(|v| v / c).collect()
    }
}

/// One update of every trainable tensor; frozen tensors and their moments
/// are left alone. `grads[i]` pairs with parameter `i`.
pub fn adam_step(params: &mut ModelParams, grads: &[Vec<f64>], state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if grads.len() != params.len() || !state.matches(params) {
        return Err(contract("adam: gradients or optimizer state do not match the parameters"));
    }
    for (i, g) in grads.iter().enumerate() {
        if g.len() != params.at(i).numel() {
            return Err(contract(format!("adam: gradient {} has wrong length", params.at(i).name)));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (i, g) in grads.iter().enumerate() {
        if !params.at(i).trainable {
            continue;
        }
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (((w, &gj), mj), vj) in params.data_mut(i).iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mj = cfg.beta1 * *mj + (1.0 - cfg.beta1) * gj;
            *vj = cfg.beta2 * *vj + (1.0 - cfg.beta2) * gj * gj;
            *w -= cfg.lr * (*mj / c1) / ((*vj / c2).sqrt() + cfg.eps);
        }
    }
    Ok(())
}
