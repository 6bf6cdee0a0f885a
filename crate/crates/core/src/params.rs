//! Named parameter collections.

use artgan_autodiff::Tensor;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{contract, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub trainable: bool,
}

impl Param {
    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

/// Ordered parameter tensors with per-tensor trainable flags.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelParams {
    params: Vec<Param>,
}

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, shape: &[usize], data: Vec<f64>, trainable: bool) -> Result<()> {
        let name = name.into();
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(contract(format!("param {name}: shape {shape:?} holds {n} values, got {}", data.len())));
        }
        if self.params.iter().any(|p| p.name == name) {
            return Err(contract(format!("duplicate param name {name}")));
        }
        self.params.push(Param {
            name,
            shape: shape.to_vec(),
            data,
            trainable,
        });
        Ok(())
    }

    /// Push a tensor drawn from `U(−1/√fan_in, 1/√fan_in)`.
    pub fn push_uniform<R: Rng + ?Sized>(
        &mut self,
        name: &str,
        shape: &[usize],
        fan_in: usize,
        trainable: bool,
        rng: &mut R,
    ) -> Result<()> {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
        self.push(name, shape, data, trainable)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn at(&self, i: usize) -> &Param {
        &self.params[i]
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(Param::numel).sum()
    }

    pub fn set_all_trainable(&mut self, trainable: bool) {
        self.params.iter_mut().for_each(|p| p.trainable = trainable);
    }

    /// Every value set to `v` (for tests and degenerate baselines).
    pub fn fill(&mut self, v: f64) {
        self.params.iter_mut().for_each(|p| p.data.iter_mut().for_each(|x| *x = v));
    }

    /// Graph leaves in parameter order. Trainable tensors require grad
    /// when `with_grad` is set; frozen ones never do.
    pub fn leaves(&self, with_grad: bool) -> Vec<Tensor> {
        self.params
            .iter()
            .map(|p| {
                let t = if with_grad && p.trainable {
                    Tensor::param(p.data.clone(), &p.shape)
                } else {
                    Tensor::new(p.data.clone(), &p.shape)
                };
                t.expect("param shapes are validated on push")
            })
            .collect()
    }

    pub(crate) fn data_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.params[i].data
    }

    /// SHA-256 over names, shapes, flags and values (hex).
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.params {
            h.update((p.name.len() as u64).to_le_bytes());
            h.update(p.name.as_bytes());
            h.update([p.trainable as u8]);
            h.update((p.shape.len() as u64).to_le_bytes());
            for d in &p.shape {
                h.update((*d as u64).to_le_bytes());
            }
            for v in &p.data {
                h.update(v.to_le_bytes());
            }
        }
        hex(&h.finalize())
    }

    /// Check names and shapes against an expected layout.
    pub fn expect_layout(&self, what: &str, layout: &[(String, Vec<usize>)]) -> Result<()> {
        if self.params.len() != layout.len() {
            return Err(contract(format!(
                "{what}: expected {} parameter tensors, got {}",
                layout.len(),
                self.params.len()
            )));
        }
        for (p, (name, shape)) in self.params.iter().zip(layout) {
            if &p.name != name || &p.shape != shape {
                return Err(contract(format!(
                    "{what}: expected {name} {shape:?}, got {} {:?}",
                    p.name, p.shape
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
