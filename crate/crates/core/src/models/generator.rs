//! Articulatory generator: latent vector → 13 EMA channels × 256 samples.

use artgan_autodiff::Tensor;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ema::NUM_CHANNELS;
use crate::error::{contract, Result};
use crate::params::ModelParams;

pub const LATENT_DIM: usize = 100;
pub const GEN_KERNEL: usize = 25;
pub const GEN_STRIDES: [usize; 5] = [2, 2, 2, 1, 2];
/// Length of the dense projection before upsampling.
pub const GEN_INIT_LEN: usize = 16;
/// Projection channels followed by the five transposed-conv outputs.
pub const GEN_CHANNELS: [usize; 6] = [512, 512, 512, 256, 256, NUM_CHANNELS];
pub const GEN_OUTPUT_LEN: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub latent_dim: usize,
    pub init_len: usize,
    pub kernel: usize,
    pub strides: Vec<usize>,
    /// `channels[0]` is the projection width; `channels[i + 1]` the output of
    /// transposed conv `i`.
    pub channels: Vec<usize>,
}

impl GeneratorConfig {
    /// Full-width architecture: activations 32×512, 64×512, 128×256,
    /// 128×256, 256×13.
    pub fn full() -> Self {
        Self::scaled(1)
    }

    /// Hidden widths divided by `divisor` (at least 1); lengths and the 13
    /// output channels are unchanged.
    pub fn scaled(divisor: usize) -> Self {
        let d = divisor.max(1);
        let mut channels: Vec<usize> = GEN_CHANNELS.iter().map(|c| (c / d).max(1)).collect();
        *channels.last_mut().unwrap() = NUM_CHANNELS;
        Self {
            latent_dim: LATENT_DIM,
            init_len: GEN_INIT_LEN,
            kernel: GEN_KERNEL,
            strides: GEN_STRIDES.to_vec(),
            channels,
        }
    }

    pub fn output_len(&self) -> usize {
        self.init_len * self.strides.iter().product::<usize>()
    }

    /// (channels, length) after each transposed conv.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut len = self.init_len;
        self.strides
            .iter()
            .zip(&self.channels[1..])
            .map(|(s, c)| {
                len *= s;
                (*c, len)
            })
            .collect()
    }

    pub fn param_layout(&self) -> Vec<(String, Vec<usize>)> {
        let c0 = self.channels[0];
        let mut v = vec![
            ("proj.w".to_string(), vec![self.latent_dim, c0 * self.init_len]),
            ("proj.b".to_string(), vec![c0 * self.init_len]),
        ];
        for i in 0..self.strides.len() {
            let (cin, cout) = (self.channels[i], self.channels[i + 1]);
            v.push((format!("deconv{i}.k"), vec![cin, cout, self.kernel]));
            v.push((format!("deconv{i}.b"), vec![cout]));
        }
        v
    }
}

pub struct GeneratorOutput {
    /// Activation after each transposed conv, `[B×C×L]`.
    pub layers: Vec<Tensor>,
    /// `[B×13×T]`, tanh-bounded.
    pub ema: Tensor,
}

#[derive(Debug, Clone)]
pub struct Generator {
    config: GeneratorConfig,
}

impl Generator {
    pub fn new(config: GeneratorConfig) -> Result<Self> {
        if config.channels.len() != config.strides.len() + 1 {
            return Err(contract("generator needs one more channel entry than layers"));
        }
        if *config.channels.last().unwrap() != NUM_CHANNELS {
            return Err(contract("generator must emit 13 channels"));
        }
        Ok(Self { config })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ModelParams> {
        let mut p = ModelParams::new();
        let cfg = &self.config;
        for (name, shape) in cfg.param_layout() {
            let fan_in = if name.starts_with("proj") {
                cfg.latent_dim
            } else {
                // inputs feeding one output sample of a transposed conv
                let layer: usize = name[6..name.find('.').unwrap()].parse().unwrap();
                let taps = cfg.kernel.div_ceil(cfg.strides[layer]);
                cfg.channels[layer] * taps
            };
            p.push_uniform(&name, &shape, fan_in, true, rng)?;
        }
        Ok(p)
    }

    pub fn check_params(&self, params: &ModelParams) -> Result<()> {
        params.expect_layout("generator", &self.config.param_layout())
    }

    /// Run on `z[B×latent_dim]`. `leaves` follow [`GeneratorConfig::param_layout`].
    pub fn forward(&self, leaves: &[Tensor], z: &Tensor) -> Result<GeneratorOutput> {
        let cfg = &self.config;
        let layout = cfg.param_layout();
        if leaves.len() != layout.len() {
            return Err(contract(format!("generator expects {} tensors, got {}", layout.len(), leaves.len())));
        }
        for (t, (name, shape)) in leaves.iter().zip(&layout) {
            if t.shape() != shape.as_slice() {
                return Err(contract(format!("generator param {name}: {:?} != {shape:?}", t.shape())));
            }
        }
        if z.shape().len() != 2 || z.shape()[1] != cfg.latent_dim {
            return Err(contract(format!("latent batch must be [B×{}], got {:?}", cfg.latent_dim, z.shape())));
        }
        let b = z.shape()[0];
        let mut h = z
            .dense(&leaves[0], &leaves[1])?
            .reshape(&[b, cfg.channels[0], cfg.init_len])?
            .relu();
        let mut layers = Vec::with_capacity(cfg.strides.len());
        let last = cfg.strides.len() - 1;
        for (i, &stride) in cfg.strides.iter().enumerate() {
            let pre = h.conv1d_transpose(&leaves[2 + 2 * i], stride)?.bias_add(&leaves[3 + 2 * i])?;
            h = if i == last { pre.tanh() } else { pre.relu() };
            layers.push(h.clone());
        }
        Ok(GeneratorOutput { layers, ema: h })
    }
}

/// `B` latent vectors drawn i.i.d. from U[−1, 1].
pub fn sample_latent<R: Rng + ?Sized>(batch: usize, rng: &mut R) -> Result<Tensor> {
    let data = (0..batch * LATENT_DIM).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Ok(Tensor::new(data, &[batch, LATENT_DIM])?)
}
