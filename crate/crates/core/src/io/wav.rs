//! 16-bit mono 16 kHz PCM WAV.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::ema::AUDIO_RATE_HZ;
use crate::error::{contract, format_err, Result};

const SCALE: f64 = 32768.0;

fn spec() -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate: AUDIO_RATE_HZ,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

/// Samples scaled to `[-1, 1)` by `1/32768`.
pub fn wav_read(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| format_err(path, format!("not a readable WAV file: {e}")))?;
    let s = reader.spec();
    if s.sample_rate != AUDIO_RATE_HZ {
        return Err(format_err(
            path,
            format!("sample rate {} Hz, expected {AUDIO_RATE_HZ} Hz", s.sample_rate),
        ));
    }
    if s.channels != 1 {
        return Err(format_err(path, format!("{} channels, expected mono", s.channels)));
    }
    if s.sample_format != SampleFormat::Int || s.bits_per_sample != 16 {
        return Err(format_err(
            path,
            format!("{}-bit {:?} samples, expected 16-bit integer PCM", s.bits_per_sample, s.sample_format),
        ));
    }
    reader
        .into_samples::<i16>()
        .map(|r| r.map(|v| v as f64 / SCALE))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format_err(path, format!("corrupt sample data: {e}")))
}

/// Rounds to the nearest 16-bit level; values outside the range are clamped.
pub fn wav_write(path: impl AsRef<Path>, samples: &[f64]) -> Result<()> {
    let path = path.as_ref();
    if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
        return Err(contract(format!("cannot write non-finite sample {v} to {}", path.display())));
    }
    let mut w = WavWriter::create(path, spec()).map_err(|e| format_err(path, format!("cannot create WAV: {e}")))?;
    for &v in samples {
        let q = (v * SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        w.write_sample(q).map_err(|e| format_err(path, e.to_string()))?;
    }
    w.finalize().map_err(|e| format_err(path, e.to_string()))
}
