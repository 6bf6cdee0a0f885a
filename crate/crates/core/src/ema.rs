//! Articulatory trajectories: 12 sensor coordinates plus voicing at 200 Hz.

use artgan_autodiff::Tensor;

use crate::error::{contract, Result};

pub const EMA_RATE_HZ: u32 = 200;
pub const AUDIO_RATE_HZ: u32 = 16_000;
/// Audio samples per EMA sample.
pub const SAMPLES_PER_FRAME: usize = (AUDIO_RATE_HZ / EMA_RATE_HZ) as usize;
pub const NUM_CHANNELS: usize = 13;
pub const NUM_ARTICULATOR_CHANNELS: usize = 12;

pub const CHANNEL_NAMES: [&str; NUM_CHANNELS] = [
    "li_x", "li_y", "ul_x", "ul_y", "ll_x", "ll_y", "tt_x", "tt_y", "tb_x", "tb_y", "td_x", "td_y", "voicing",
];

/// Sensor placements in channel order (each owns an x and a y channel).
pub const PLACES: [&str; 6] = ["li", "ul", "ll", "tt", "tb", "td"];

pub mod channel {
    pub const LI_X: usize = 0;
    pub const LI_Y: usize = 1;
    pub const UL_X: usize = 2;
    pub const UL_Y: usize = 3;
    pub const LL_X: usize = 4;
    pub const LL_Y: usize = 5;
    pub const TT_X: usize = 6;
    pub const TT_Y: usize = 7;
    pub const TB_X: usize = 8;
    pub const TB_Y: usize = 9;
    pub const TD_X: usize = 10;
    pub const TD_Y: usize = 11;
    pub const VOICING: usize = 12;
}

pub fn channel_index(name: &str) -> Option<usize> {
    CHANNEL_NAMES.iter().position(|n| *n == name)
}

/// 13 channels × T samples at 200 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct EmaTrajectory {
    channels: Vec<Vec<f64>>,
}

impl EmaTrajectory {
    pub fn new(channels: Vec<Vec<f64>>) -> Result<Self> {
        if channels.len() != NUM_CHANNELS {
            return Err(contract(format!("EMA needs {NUM_CHANNELS} channels, got {}", channels.len())));
        }
        let t = channels[0].len();
        if t == 0 {
            return Err(contract("EMA trajectory is empty"));
        }
        if let Some((i, c)) = channels.iter().enumerate().find(|(_, c)| c.len() != t) {
            return Err(contract(format!(
                "channel {} has {} samples, expected {t}",
                CHANNEL_NAMES[i],
                c.len()
            )));
        }
        Ok(Self { channels })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![vec![0.0; len]; NUM_CHANNELS])
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_rate(&self) -> u32 {
        EMA_RATE_HZ
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channel_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    /// Item `index` of a `[B×13×T]` tensor.
    pub fn from_tensor(t: &Tensor, index: usize) -> Result<Self> {
        let shape = t.shape();
        if shape.len() != 3 || shape[1] != NUM_CHANNELS || index >= shape[0] {
            return Err(contract(format!("cannot take EMA item {index} from shape {shape:?}")));
        }
        let len = shape[2];
        let base = index * NUM_CHANNELS * len;
        let channels = (0..NUM_CHANNELS)
            .map(|c| t.data()[base + c * len..base + (c + 1) * len].to_vec())
            .collect();
        Self::new(channels)
    }

    /// Stack trajectories of equal length into a `[B×13×T]` constant.
    pub fn batch_tensor(items: &[EmaTrajectory]) -> Result<Tensor> {
        let first = items.first().ok_or_else(|| contract("empty EMA batch"))?;
        let len = first.len();
        let mut data = Vec::with_capacity(items.len() * NUM_CHANNELS * len);
        for it in items {
            if it.len() != len {
                return Err(contract("EMA batch items differ in length"));
            }
            for c in &it.channels {
                data.extend_from_slice(c);
            }
        }
        Ok(Tensor::new(data, &[items.len(), NUM_CHANNELS, len])?)
    }

    pub fn all_finite(&self) -> bool {
        self.channels.iter().flatten().all(|v| v.is_finite())
    }
}
