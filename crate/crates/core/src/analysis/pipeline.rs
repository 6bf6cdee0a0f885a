//! Per-channel comparison of generated and recorded articulation:
//! smoothing, time alignment, correlation.

use std::fmt::Write as _;

use crate::analysis::dtw::dtw_align;
use crate::analysis::loess::{loess_smooth, LoessDegree};
use crate::analysis::pearson::pearson_r;
use crate::ema::{EmaTrajectory, PLACES};
use crate::error::Result;

pub const REPORT_HEADER: &str = "place,axis,r,dtw_cost";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub span: f64,
    pub degree: LoessDegree,
    /// Smooth the recorded trajectory with the same settings as the generated one.
    pub smooth_real: bool,
    /// Z-score each channel before alignment.
    pub z_normalize: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            span: 0.2,
            degree: LoessDegree::Linear,
            smooth_real: true,
            z_normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRow {
    pub place: &'static str,
    pub axis: char,
    /// `None` when a warped series has zero variance.
    pub r: Option<f64>,
    pub dtw_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCorrelationReport {
    pub rows: Vec<ChannelRow>,
}

impl ChannelCorrelationReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{REPORT_HEADER}\n");
        for row in &self.rows {
            let r = row.r.map_or_else(|| "NA".to_string(), |r| r.to_string());
            writeln!(s, "{},{},{},{}", row.place, row.axis, r, row.dtw_cost).unwrap();
        }
        s
    }
}

fn z_score(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - mean) / sd).collect()
}

/// One row per articulator coordinate (voicing excluded), in channel order.
pub fn dtw_corr_pipeline(
    gen: &EmaTrajectory,
    real: &EmaTrajectory,
    opts: &PipelineOptions,
) -> Result<ChannelCorrelationReport> {
    let mut rows = Vec::with_capacity(2 * PLACES.len());
    for (p, place) in PLACES.iter().enumerate() {
        for (k, axis) in ['x', 'y'].into_iter().enumerate() {
            let ch = 2 * p + k;
            let mut g = loess_smooth(gen.channel(ch), opts.span, opts.degree)?;
            let mut r = if opts.smooth_real {
                loess_smooth(real.channel(ch), opts.span, opts.degree)?
            } else {
                real.channel(ch).to_vec()
            };
            if opts.z_normalize {
                g = z_score(&g);
                r = z_score(&r);
            }
            let aligned = dtw_align(&g, &r)?;
            let corr = if aligned.path.len() < 2 {
                None
            } else {
                pearson_r(&aligned.warped_a, &aligned.warped_b)?
            };
            rows.push(ChannelRow {
                place,
                axis,
                r: corr,
                dtw_cost: aligned.total_cost,
            });
        }
    }
    Ok(ChannelCorrelationReport { rows })
}
