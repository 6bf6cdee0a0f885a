//! EMA trajectories as CSV: one header row of channel names, one row per
//! 200 Hz sample.

use std::fmt::Write as _;
use std::path::Path;

use crate::ema::{EmaTrajectory, CHANNEL_NAMES, NUM_CHANNELS};
use crate::error::{format_err, io_err, Result};

pub fn ema_to_csv(ema: &EmaTrajectory) -> String {
    let mut out = CHANNEL_NAMES.join(",");
    out.push('\n');
    for t in 0..ema.len() {
        for c in 0..NUM_CHANNELS {
            if c > 0 {
                out.push(',');
            }
            // 17 significant digits: exact f64 roundtrip
            write!(out, "{:.16e}", ema.channel(c)[t]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn ema_from_csv(text: &str, path: &Path) -> Result<EmaTrajectory> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| format_err(path, "empty EMA file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    for (i, want) in CHANNEL_NAMES.iter().enumerate() {
        match cols.get(i) {
            Some(got) if got == want => {}
            Some(got) => {
                return Err(format_err(
                    path,
                    format!("column {} is {got:?}, expected {want:?}", i + 1),
                ))
            }
            None => return Err(format_err(path, format!("missing column {want:?}"))),
        }
    }
    if cols.len() > NUM_CHANNELS {
        return Err(format_err(path, format!("unexpected extra column {:?}", cols[NUM_CHANNELS])));
    }
    let mut channels = vec![Vec::new(); NUM_CHANNELS];
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != NUM_CHANNELS {
            return Err(format_err(
                path,
                format!("line {}: {} fields, expected {NUM_CHANNELS}", lineno + 1, fields.len()),
            ));
        }
        for (c, f) in fields.iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| {
                format_err(path, format!("line {}: column {}: bad number {f:?}", lineno + 1, CHANNEL_NAMES[c]))
            })?;
            if !v.is_finite() {
                return Err(format_err(path, format!("line {}: non-finite {}", lineno + 1, CHANNEL_NAMES[c])));
            }
            channels[c].push(v);
        }
    }
    if channels[0].is_empty() {
        return Err(format_err(path, "EMA file has no samples"));
    }
    EmaTrajectory::new(channels)
}

pub fn ema_read(path: impl AsRef<Path>) -> Result<EmaTrajectory> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    ema_from_csv(&text, path)
}

pub fn ema_write(path: impl AsRef<Path>, ema: &EmaTrajectory) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ema_to_csv(ema)).map_err(io_err(path))
}
