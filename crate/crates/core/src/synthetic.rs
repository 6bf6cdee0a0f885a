//! Eight hand-made EMA "words" rendered through the source-filter model:
//! a small, fully reproducible training set.

use crate::ema::{channel, EmaTrajectory, NUM_CHANNELS};
use crate::error::Result;
use crate::io::dataset::Dataset;
use crate::models::generator::GEN_OUTPUT_LEN;
use crate::models::physical::{PhysicalKind, PhysicalModel, PhysicalModelSpec};

pub const SYNTHETIC_WORDS: [&str; 8] = ["ask", "dark", "year", "water", "wash", "rag", "oily", "greasy"];

/// Articulatory target at a time fraction in `[0, 1]`.
#[derive(Debug, Clone, Copy)]
struct Key {
    at: f64,
    voicing: f64,
    tb_x: f64,
    tb_y: f64,
    tt_y: f64,
    /// Lip opening, `ul_y − ll_y`.
    lips: f64,
}

const fn k(at: f64, voicing: f64, tb_x: f64, tb_y: f64, tt_y: f64, lips: f64) -> Key {
    Key {
        at,
        voicing,
        tb_x,
        tb_y,
        tt_y,
        lips,
    }
}

fn keys(word: &str) -> Vec<Key> {
    const SIL: f64 = -1.0;
    match word {
        "ask" => vec![
            k(0.0, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.2, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.3, 1.0, 0.3, -0.6, -0.2, 0.8),
            k(0.5, 1.0, 0.3, -0.5, -0.2, 0.7),
            k(0.58, -0.8, 0.2, 0.0, 0.8, 0.3),
            k(0.68, -0.9, -0.6, 0.8, 0.2, 0.2),
            k(0.8, SIL, 0.0, 0.0, 0.0, -0.6),
            k(1.0, SIL, 0.0, 0.0, 0.0, -0.6),
        ],
        "dark" => vec![
            k(0.0, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.18, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.22, 0.6, 0.4, 0.0, 0.9, 0.2),
            k(0.35, 1.0, -0.5, -0.7, -0.4, 0.8),
            k(0.55, 1.0, -0.3, -0.3, 0.5, 0.5),
            k(0.66, -0.9, -0.7, 0.9, 0.0, 0.3),
            k(0.8, SIL, 0.0, 0.0, 0.0, -0.6),
            k(1.0, SIL, 0.0, 0.0, 0.0, -0.6),
        ],
        "year" => vec![
            k(0.0, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.15, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.22, 1.0, 0.9, 0.8, 0.2, 0.1),
            k(0.4, 1.0, 0.8, 0.6, 0.0, 0.2),
            k(0.6, 1.0, 0.0, 0.0, 0.6, 0.3),
            k(0.75, 1.0, -0.2, -0.1, 0.7, 0.2),
            k(0.85, SIL, 0.0, 0.0, 0.0, -0.6),
            k(1.0, SIL, 0.0, 0.0, 0.0, -0.6),
        ],
        "water" => vec![
            k(0.0, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.15, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.2, 1.0, -0.8, 0.4, -0.2, -0.3),
            k(0.35, 1.0, -0.6, -0.6, -0.3, 0.7),
            k(0.48, 0.8, 0.2, 0.0, 0.9, 0.4),
            k(0.6, 1.0, -0.2, -0.2, 0.5, 0.4),
            k(0.75, 1.0, -0.3, -0.1, 0.6, 0.3),
            k(0.85, SIL, 0.0, 0.0, 0.0, -0.6),
            k(1.0, SIL, 0.0, 0.0, 0.0, -0.6),
        ],
        "wash" => vec![
            k(0.0, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.15, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.2, 1.0, -0.8, 0.4, -0.2, -0.3),
            k(0.38, 1.0, -0.7, -0.7, -0.4, 0.8),
            k(0.52, 1.0, -0.6, -0.6, -0.3, 0.7),
            k(0.62, -0.9, 0.3, 0.3, 0.6, 0.0),
            k(0.82, -0.9, 0.3, 0.3, 0.6, 0.0),
            k(0.9, SIL, 0.0, 0.0, 0.0, -0.6),
            k(1.0, SIL, 0.0, 0.0, 0.0, -0.6),
        ],
        "rag" => vec![
            k(0.0, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.18, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.24, 1.0, -0.3, 0.2, 0.4, 0.0),
            k(0.4, 1.0, 0.5, -0.8, -0.3, 0.9),
            k(0.58, 1.0, 0.4, -0.7, -0.2, 0.8),
            k(0.68, 0.4, -0.7, 0.9, 0.0, 0.3),
            k(0.8, SIL, 0.0, 0.0, 0.0, -0.6),
            k(1.0, SIL, 0.0, 0.0, 0.0, -0.6),
        ],
        "oily" => vec![
            k(0.0, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.15, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.22, 1.0, -0.7, -0.2, -0.3, 0.2),
            k(0.38, 1.0, 0.7, 0.6, 0.0, 0.4),
            k(0.5, 1.0, 0.2, 0.1, 0.9, 0.4),
            k(0.7, 1.0, 0.9, 0.8, 0.1, 0.3),
            k(0.82, SIL, 0.0, 0.0, 0.0, -0.6),
            k(1.0, SIL, 0.0, 0.0, 0.0, -0.6),
        ],
        "greasy" => vec![
            k(0.0, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.12, SIL, 0.0, 0.0, 0.0, -0.6),
            k(0.16, 0.5, -0.7, 0.9, 0.0, 0.3),
            k(0.26, 1.0, 0.0, 0.2, 0.4, 0.2),
            k(0.4, 1.0, 0.9, 0.8, 0.2, 0.2),
            k(0.5, -0.9, 0.5, 0.4, 0.8, 0.1),
            k(0.62, -0.9, 0.5, 0.4, 0.8, 0.1),
            k(0.76, 1.0, 0.9, 0.8, 0.2, 0.2),
            k(0.88, SIL, 0.0, 0.0, 0.0, -0.6),
            k(1.0, SIL, 0.0, 0.0, 0.0, -0.6),
        ],
        _ => Vec::new(),
    }
}

/// Raised-cosine interpolation between consecutive keys.
fn interpolate(keys: &[Key], x: f64, field: fn(&Key) -> f64) -> f64 {
    let i = keys.iter().rposition(|k| k.at <= x).unwrap_or(0);
    if i + 1 >= keys.len() {
        return field(&keys[i]);
    }
    let (a, b) = (&keys[i], &keys[i + 1]);
    let u = ((x - a.at) / (b.at - a.at)).clamp(0.0, 1.0);
    let w = 0.5 - 0.5 * (std::f64::consts::PI * u).cos();
    field(a) + w * (field(b) - field(a))
}

/// Trajectory of `len` frames for one of [`SYNTHETIC_WORDS`].
pub fn synthetic_ema(word: &str, len: usize) -> Option<EmaTrajectory> {
    let keys = &keys(word)[..];
    if keys.is_empty() || len < 2 {
        return None;
    }
    let mut ch = vec![vec![0.0; len]; NUM_CHANNELS];
    for t in 0..len {
        let x = t as f64 / (len - 1) as f64;
        let tb_x = interpolate(keys, x, |k| k.tb_x);
        let tb_y = interpolate(keys, x, |k| k.tb_y);
        let tt_y = interpolate(keys, x, |k| k.tt_y);
        let lips = interpolate(keys, x, |k| k.lips);
        // jaw couples the lower lip, incisor and tongue body
        let jaw = -0.4 * lips.max(0.0);
        ch[channel::LI_X][t] = 0.05 * tb_x;
        ch[channel::LI_Y][t] = jaw;
        ch[channel::UL_X][t] = 0.1 * lips.min(0.0);
        ch[channel::UL_Y][t] = 0.5 * lips;
        ch[channel::LL_X][t] = 0.15 * lips.min(0.0);
        ch[channel::LL_Y][t] = -0.5 * lips;
        ch[channel::TT_X][t] = 0.5 * tb_x + 0.2 * tt_y;
        ch[channel::TT_Y][t] = tt_y;
        ch[channel::TB_X][t] = tb_x;
        ch[channel::TB_Y][t] = tb_y;
        ch[channel::TD_X][t] = 0.8 * tb_x;
        ch[channel::TD_Y][t] = 0.7 * tb_y + 0.3 * jaw;
        ch[channel::VOICING][t] = interpolate(keys, x, |k| k.voicing);
    }
    EmaTrajectory::new(ch).ok()
}

/// The eight words at generator length (256 frames), rendered to 20480
/// samples with a source-filter model seeded by `seed`.
pub fn synthetic_dataset(seed: u64) -> Result<(Dataset, Vec<EmaTrajectory>)> {
    let model = PhysicalModel::new(PhysicalModelSpec::new(PhysicalKind::SourceFilter, seed))?;
    let mut ds = Dataset {
        names: Vec::new(),
        items: Vec::new(),
    };
    let mut emas = Vec::new();
    for w in SYNTHETIC_WORDS {
        let ema = synthetic_ema(w, GEN_OUTPUT_LEN).expect("built-in word");
        ds.names.push(format!("{w}.wav"));
        ds.items.push(model.synthesize(&ema)?);
        emas.push(ema);
    }
    Ok((ds, emas))
}
