//! Two-dimensional articulator paths for external plotting.

use std::fmt::Write as _;

use crate::analysis::loess::{loess_smooth, LoessDegree};
use crate::ema::{EmaTrajectory, PLACES};
use crate::error::Result;

pub const EXPORT_HEADER: &str = "sample,gen_x,gen_y,real_x,real_y";
pub const DEFAULT_REAL_SCALE: f64 = 3.0;

/// One CSV per place, `(place, text)`. Generated coordinates are smoothed;
/// recorded ones are multiplied by `real_scale` and left empty when absent.
pub fn trajectory_export(
    gen: &EmaTrajectory,
    real: Option<&EmaTrajectory>,
    real_scale: f64,
    span: f64,
    degree: LoessDegree,
) -> Result<Vec<(&'static str, String)>> {
    let mut out = Vec::with_capacity(PLACES.len());
    for (p, place) in PLACES.iter().enumerate() {
        let gx = loess_smooth(gen.channel(2 * p), span, degree)?;
        let gy = loess_smooth(gen.channel(2 * p + 1), span, degree)?;
        let mut s = format!("{EXPORT_HEADER}\n");
        for i in 0..gen.len() {
            write!(s, "{i},{},{},", gx[i], gy[i]).unwrap();
            match real.filter(|r| i < r.len()) {
                Some(r) => writeln!(
                    s,
                    "{},{}",
                    r.channel(2 * p)[i] * real_scale,
                    r.channel(2 * p + 1)[i] * real_scale
                )
                .unwrap(),
                None => s.push_str(",\n"),
            }
        }
        out.push((*place, s));
    }
    Ok(out)
}
