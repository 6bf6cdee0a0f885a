//! Frozen EMA-to-waveform models.
//!
//! Both kinds map `[B×13×T]` trajectories at 200 Hz to `[B×1×80·T]` audio at
//! 16 kHz. Their parameters are stored non-trainable and never updated.

use std::f64::consts::PI;

use artgan_autodiff::{FrameSpec, ResonatorSpec, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ema::{channel, EmaTrajectory, AUDIO_RATE_HZ, EMA_RATE_HZ, NUM_CHANNELS, SAMPLES_PER_FRAME};
use crate::error::{contract, Result};
use crate::params::{hex, ModelParams};

pub const FRAME_HOP: usize = SAMPLES_PER_FRAME;
pub const FRAME_WINDOW: usize = 2 * FRAME_HOP;
pub const PITCH_HZ: f64 = 120.0;

const FORMANT_BASE: [f64; 3] = [300.0, 800.0, 2000.0];
const FORMANT_RANGE: [f64; 3] = [400.0, 1400.0, 1000.0];
const FORMANT_BANDWIDTH: [f64; 3] = [80.0, 120.0, 160.0];
/// Channels driving F1, F2, F3.
const FORMANT_CHANNEL: [usize; 3] = [channel::TB_Y, channel::TB_X, channel::TT_Y];
const INPUT_SCALE: f64 = 2.0;
const NOISE_AMP: f64 = 0.15;
const OUTPUT_GAIN: f64 = 30.0;

const RANDOM_STRIDES: [usize; 3] = [4, 4, 5];
const RANDOM_KERNELS: [usize; 3] = [8, 8, 10];
const RANDOM_CHANNELS: [usize; 4] = [NUM_CHANNELS, 64, 32, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhysicalKind {
    SourceFilter,
    FrozenRandom,
}

impl PhysicalKind {
    pub fn name(self) -> &'static str {
        match self {
            PhysicalKind::SourceFilter => "source-filter",
            PhysicalKind::FrozenRandom => "frozen-random",
        }
    }
}

impl std::str::FromStr for PhysicalKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.replace('_', "-").as_str() {
            "source-filter" => Ok(PhysicalKind::SourceFilter),
            "frozen-random" => Ok(PhysicalKind::FrozenRandom),
            other => Err(format!("unknown physical model kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhysicalModelSpec {
    pub kind: PhysicalKind,
    pub seed: u64,
    pub frame_hop: usize,
    pub frame_window: usize,
}

impl PhysicalModelSpec {
    pub fn new(kind: PhysicalKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            frame_hop: FRAME_HOP,
            frame_window: FRAME_WINDOW,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.frame_hop != (AUDIO_RATE_HZ / EMA_RATE_HZ) as usize {
            return Err(contract(format!("frame hop must be 80 samples, got {}", self.frame_hop)));
        }
        if self.frame_window != FRAME_WINDOW {
            return Err(contract(format!("frame window must be 160 samples, got {}", self.frame_window)));
        }
        Ok(())
    }

    pub fn param_layout(&self) -> Vec<(String, Vec<usize>)> {
        match self.kind {
            PhysicalKind::SourceFilter => vec![
                ("formant.base".into(), vec![3]),
                ("formant.range".into(), vec![3]),
                ("formant.bandwidth".into(), vec![3]),
                ("source.pitch".into(), vec![1]),
                ("source.noise_amp".into(), vec![1]),
                ("input.scale".into(), vec![1]),
                ("output.gain".into(), vec![1]),
            ],
            PhysicalKind::FrozenRandom => {
                let mut v = Vec::new();
                for i in 0..RANDOM_STRIDES.len() {
                    let (cin, cout) = (RANDOM_CHANNELS[i], RANDOM_CHANNELS[i + 1]);
                    v.push((format!("deconv{i}.k"), vec![cin, cout, RANDOM_KERNELS[i]]));
                    v.push((format!("deconv{i}.b"), vec![cout]));
                }
                v
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhysicalModel {
    spec: PhysicalModelSpec,
    params: ModelParams,
}

impl PhysicalModel {
    pub fn new(spec: PhysicalModelSpec) -> Result<Self> {
        spec.validate()?;
        let mut params = ModelParams::new();
        match spec.kind {
            PhysicalKind::SourceFilter => {
                params.push("formant.base", &[3], FORMANT_BASE.to_vec(), false)?;
                params.push("formant.range", &[3], FORMANT_RANGE.to_vec(), false)?;
                params.push("formant.bandwidth", &[3], FORMANT_BANDWIDTH.to_vec(), false)?;
                params.push("source.pitch", &[1], vec![PITCH_HZ], false)?;
                params.push("source.noise_amp", &[1], vec![NOISE_AMP], false)?;
                params.push("input.scale", &[1], vec![INPUT_SCALE], false)?;
                params.push("output.gain", &[1], vec![OUTPUT_GAIN], false)?;
            }
            PhysicalKind::FrozenRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                for (name, shape) in spec.param_layout() {
                    let layer: usize = name[6..7].parse().expect("single-digit layer index");
                    let fan_in = RANDOM_CHANNELS[layer] * RANDOM_KERNELS[layer].div_ceil(RANDOM_STRIDES[layer]);
                    params.push_uniform(&name, &shape, fan_in, false, &mut rng)?;
                }
            }
        }
        Ok(Self { spec, params })
    }

    /// Adopt imported weights; every tensor is forced non-trainable.
    pub fn from_params(spec: PhysicalModelSpec, mut params: ModelParams) -> Result<Self> {
        spec.validate()?;
        params.expect_layout("physical model", &spec.param_layout())?;
        params.set_all_trainable(false);
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &PhysicalModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// SHA-256 over kind, seed, framing and all parameter values.
    pub fn params_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.spec.kind.name().as_bytes());
        h.update(self.spec.seed.to_le_bytes());
        h.update((self.spec.frame_hop as u64).to_le_bytes());
        h.update((self.spec.frame_window as u64).to_le_bytes());
        h.update(self.params.content_hash().as_bytes());
        hex(&h.finalize())
    }

    /// `[B×13×T] → [B×1×80·T]`, differentiable w.r.t. `ema`.
    pub fn forward(&self, ema: &Tensor) -> Result<Tensor> {
        let shape = ema.shape();
        if shape.len() != 3 || shape[1] != NUM_CHANNELS || shape[2] < 2 {
            return Err(contract(format!("physical model needs [B×13×T] with T ≥ 2, got {shape:?}")));
        }
        if !ema.data().iter().all(|v| v.is_finite()) {
            return Err(contract("physical model input contains non-finite values"));
        }
        match self.spec.kind {
            PhysicalKind::SourceFilter => self.source_filter(ema),
            PhysicalKind::FrozenRandom => self.frozen_random(ema),
        }
    }

    /// Render one trajectory to `80·T` samples.
    pub fn synthesize(&self, ema: &EmaTrajectory) -> Result<Vec<f64>> {
        let _guard = artgan_autodiff::no_grad();
        let out = self.forward(&EmaTrajectory::batch_tensor(std::slice::from_ref(ema))?)?;
        Ok(out.to_vec())
    }

    fn scalar(&self, name: &str, i: usize) -> f64 {
        self.params.get(name).expect("layout checked at construction").data[i]
    }

    fn source_filter(&self, ema: &Tensor) -> Result<Tensor> {
        let (b, t) = (ema.shape()[0], ema.shape()[2]);
        let (hop, win) = (self.spec.frame_hop, self.spec.frame_window);
        let len = hop * t;
        let frames = FrameSpec {
            hop,
            offset: (win - hop) / 2,
            win,
            frames: t,
            signal_len: len,
        };
        let framed = |signal: Vec<f64>| -> Result<Tensor> {
            let batch: Vec<f64> = (0..b).flat_map(|_| signal.iter().copied()).collect();
            Ok(Tensor::new(batch, &[b, len])?.frame(frames)?)
        };
        let noise = framed(self.noise(len))?;
        let pulses = framed(pulse_train(len, self.scalar("source.pitch", 0)))?;

        let voicing = ema
            .select_channel(channel::VOICING)?
            .add_scalar(1.0)
            .scale(0.5)
            .clamp(0.0, 1.0)
            .expand_last(win)?;
        let source = noise.add(&voicing.mul(&pulses.sub(&noise)?)?)?;

        let scale = self.scalar("input.scale", 0);
        let mut filter: Option<Tensor> = None;
        for (k, &ch) in FORMANT_CHANNEL.iter().enumerate() {
            let freq = ema
                .select_channel(ch)?
                .scale(scale)
                .sigmoid()
                .scale(self.scalar("formant.range", k))
                .add_scalar(self.scalar("formant.base", k));
            let h = freq.resonator_bank(ResonatorSpec {
                bandwidth: self.scalar("formant.bandwidth", k),
                taps: win,
                sample_rate: AUDIO_RATE_HZ as f64,
            })?;
            filter = Some(match filter {
                None => h,
                Some(acc) => acc.add(&h)?,
            });
        }
        let filter = filter.expect("three formants");

        let gain = ema
            .select_channel(channel::UL_Y)?
            .sub(&ema.select_channel(channel::LL_Y)?)?
            .scale(0.5)
            .add_scalar(1.0)
            .scale(0.5)
            .clamp(0.05, 1.0)
            .expand_last(win)?;
        let window: Vec<f64> = (0..b * t).flat_map(|_| hann(win)).collect();
        let window = Tensor::new(window, &[b, t, win])?;

        let y = source
            .frame_conv(&filter)?
            .mul(&gain)?
            .mul(&window)?
            .overlap_add(frames)?
            .scale(self.scalar("output.gain", 0))
            .tanh();
        Ok(y.reshape(&[b, 1, len])?)
    }

    fn frozen_random(&self, ema: &Tensor) -> Result<Tensor> {
        let leaves = self.params.leaves(false);
        let mut h = ema.clone();
        for (i, &stride) in RANDOM_STRIDES.iter().enumerate() {
            h = h
                .conv1d_transpose(&leaves[2 * i], stride)?
                .bias_add(&leaves[2 * i + 1])?
                .tanh();
        }
        Ok(h)
    }

    fn noise(&self, len: usize) -> Vec<f64> {
        let amp = self.scalar("source.noise_amp", 0);
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ 0x6e6f_6973_6500_0000);
        (0..len).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()
    }
}

/// Unit impulses at `round(k·fs/f0)`, on the absolute sample grid so the
/// phase is continuous across frames.
pub fn pulse_train(len: usize, pitch_hz: f64) -> Vec<f64> {
    let period = AUDIO_RATE_HZ as f64 / pitch_hz;
    let mut out = vec![0.0; len];
    let mut k = 0.0;
    loop {
        let i = (k * period).round() as usize;
        if i >= len {
            break;
        }
        out[i] = 1.0;
        k += 1.0;
    }
    out
}

/// Periodic Hann window; copies at hop `n/2` sum to one.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(kind: PhysicalKind, seed: u64) -> PhysicalModel {
        PhysicalModel::new(PhysicalModelSpec::new(kind, seed)).unwrap()
    }

    #[test]
    fn output_lengths() {
        for kind in [PhysicalKind::SourceFilter, PhysicalKind::FrozenRandom] {
            let m = model(kind, 1);
            for t in [2, 3, 17, 256] {
                let out = m.forward(&Tensor::zeros(&[2, 13, t]).unwrap()).unwrap();
                assert_eq!(out.shape(), &[2, 1, 80 * t]);
                assert!(out.data().iter().all(|v| v.abs() <= 1.0));
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let m = model(PhysicalKind::SourceFilter, 0);
        assert!(m.forward(&Tensor::zeros(&[1, 13, 1]).unwrap()).is_err());
        assert!(m.forward(&Tensor::zeros(&[1, 12, 8]).unwrap()).is_err());
        let mut d = vec![0.0; 13 * 4];
        d[5] = f64::NAN;
        assert!(m.forward(&Tensor::new(d, &[1, 13, 4]).unwrap()).is_err());
    }

    #[test]
    fn zero_ema_is_half_voiced_and_deterministic() {
        let a = model(PhysicalKind::SourceFilter, 5);
        let b = model(PhysicalKind::SourceFilter, 5);
        let x = Tensor::zeros(&[1, 13, 64]).unwrap();
        let ya = a.forward(&x).unwrap();
        assert_eq!(ya.data(), b.forward(&x).unwrap().data());
        let rms = (ya.data().iter().map(|v| v * v).sum::<f64>() / ya.numel() as f64).sqrt();
        assert!(rms > 0.01, "rms {rms}");
    }

    #[test]
    fn hann_sums_to_one() {
        let w = hann(160);
        for i in 0..80 {
            assert!((w[i] + w[i + 80] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pulse_period() {
        let p = pulse_train(1000, 120.0);
        let idx: Vec<usize> = p.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(i, _)| i).collect();
        assert_eq!(&idx[..4], &[0, 133, 267, 400]);
    }

    #[test]
    fn hashes() {
        let a = model(PhysicalKind::FrozenRandom, 1);
        let b = model(PhysicalKind::FrozenRandom, 2);
        assert_ne!(a.params_hash(), b.params_hash());
        let h = a.params_hash();
        a.forward(&Tensor::zeros(&[1, 13, 4]).unwrap()).unwrap();
        assert_eq!(h, a.params_hash());
        assert!(a.params().iter().all(|p| !p.trainable));
    }

    #[test]
    fn import_forces_frozen() {
        let a = model(PhysicalKind::FrozenRandom, 3);
        let mut p = a.params().clone();
        p.set_all_trainable(true);
        let b = PhysicalModel::from_params(*a.spec(), p).unwrap();
        assert_eq!(a.params_hash(), b.params_hash());
        let wrong = model(PhysicalKind::SourceFilter, 3).params().clone();
        assert!(PhysicalModel::from_params(*a.spec(), wrong).is_err());
    }
}
