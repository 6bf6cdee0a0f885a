//! Waveform critic: five strided convolutions and a linear score.

use artgan_autodiff::Tensor;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::params::ModelParams;

pub const CRITIC_INPUT_LEN: usize = 20_480;
pub const CRITIC_KERNEL: usize = 25;
pub const CRITIC_STRIDE: usize = 4;
pub const CRITIC_CHANNELS: [usize; 5] = [64, 128, 256, 512, 512];
pub const CRITIC_ALPHA: f64 = 0.2;
pub const PHASE_SHUFFLE: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticConfig {
    pub input_len: usize,
    pub kernel: usize,
    pub stride: usize,
    pub channels: Vec<usize>,
    pub alpha: f64,
    /// Maximum phase-shuffle shift; 0 disables shuffling.
    pub phase_shuffle: usize,
}

impl CriticConfig {
    pub fn full() -> Self {
        Self::scaled(1)
    }

    /// Widths divided by `divisor` (at least 1 channel each).
    pub fn scaled(divisor: usize) -> Self {
        let d = divisor.max(1);
        Self {
            input_len: CRITIC_INPUT_LEN,
            kernel: CRITIC_KERNEL,
            stride: CRITIC_STRIDE,
            channels: CRITIC_CHANNELS.iter().map(|c| (c / d).max(1)).collect(),
            alpha: CRITIC_ALPHA,
            phase_shuffle: PHASE_SHUFFLE,
        }
    }

    /// Frames left after all strided layers (20 for the default input).
    pub fn final_len(&self) -> usize {
        self.channels
            .iter()
            .fold(self.input_len, |len, _| len.div_ceil(self.stride))
    }

    pub fn param_layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut v = Vec::new();
        let mut cin = 1;
        for (i, &c) in self.channels.iter().enumerate() {
            v.push((format!("conv{i}.k"), vec![c, cin, self.kernel]));
            v.push((format!("conv{i}.b"), vec![c]));
            cin = c;
        }
        v.push(("score.w".to_string(), vec![cin * self.final_len(), 1]));
        v.push(("score.b".to_string(), vec![1]));
        v
    }
}

/// Source of phase-shuffle shifts for one forward pass.
pub enum Shuffle<'a> {
    Off,
    Random(&'a mut dyn RngCore),
}

#[derive(Debug, Clone)]
pub struct Critic {
    config: CriticConfig,
}

impl Critic {
    pub fn new(config: CriticConfig) -> Result<Self> {
        if config.channels.is_empty() || config.stride == 0 {
            return Err(contract("critic needs at least one layer and stride >= 1"));
        }
        Ok(Self { config })
    }

    pub fn config(&self) -> &CriticConfig {
        &self.config
    }

    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ModelParams> {
        let mut p = ModelParams::new();
        let layout = self.config.param_layout();
        // layout alternates weight, bias; both use the weight's fan-in
        for pair in layout.chunks(2) {
            let w_shape = &pair[0].1;
            let fan_in = if w_shape.len() == 3 { w_shape[1] * w_shape[2] } else { w_shape[0] };
            for (name, shape) in pair {
                p.push_uniform(name, shape, fan_in, true, rng)?;
            }
        }
        Ok(p)
    }

    pub fn check_params(&self, params: &ModelParams) -> Result<()> {
        params.expect_layout("critic", &self.config.param_layout())
    }

    /// Score `audio[B×1×input_len]` → `[B×1]`.
    pub fn forward(&self, leaves: &[Tensor], audio: &Tensor, mut shuffle: Shuffle<'_>) -> Result<Tensor> {
        let cfg = &self.config;
        let layout = cfg.param_layout();
        if leaves.len() != layout.len() {
            return Err(contract(format!("critic expects {} tensors, got {}", layout.len(), leaves.len())));
        }
        if audio.shape().len() != 3 || audio.shape()[1] != 1 || audio.shape()[2] != cfg.input_len {
            return Err(contract(format!(
                "critic input must be [B×1×{}], got {:?}",
                cfg.input_len,
                audio.shape()
            )));
        }
        let b = audio.shape()[0];
        let n = cfg.phase_shuffle as isize;
        let mut h = audio.clone();
        let layers = cfg.channels.len();
        for i in 0..layers {
            h = h
                .conv1d_same(&leaves[2 * i], cfg.stride)?
                .bias_add(&leaves[2 * i + 1])?
                .leaky_relu(cfg.alpha);
            if i + 1 < layers && n > 0 {
                if let Shuffle::Random(rng) = &mut shuffle {
                    let shifts: Vec<isize> = (0..b).map(|_| rng.gen_range(-n..=n)).collect();
                    h = h.phase_shift(&shifts)?;
                }
            }
        }
        let flat = h.reshape(&[b, cfg.channels[layers - 1] * cfg.final_len()])?;
        Ok(flat.dense(&leaves[2 * layers], &leaves[2 * layers + 1])?)
    }
}
