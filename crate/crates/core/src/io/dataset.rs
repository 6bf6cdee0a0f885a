//! Directories of word-length recordings, fitted to the critic input length.

use std::path::Path;

use crate::error::{format_err, io_err, Result};
use crate::io::wav::wav_read;
use crate::models::critic::CRITIC_INPUT_LEN;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub items: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item_len(&self) -> usize {
        self.items.first().map_or(0, Vec::len)
    }
}

/// Zero-pad symmetrically (extra sample on the right) or keep the centre.
pub fn fit_length(x: &[f64], target: usize) -> Vec<f64> {
    if x.len() >= target {
        let start = (x.len() - target) / 2;
        x[start..start + target].to_vec()
    } else {
        let left = (target - x.len()) / 2;
        let mut out = vec![0.0; target];
        out[left..left + x.len()].copy_from_slice(x);
        out
    }
}

/// Every `*.wav` in `dir`, sorted by file name, fitted to `target_len`.
pub fn dataset_load(dir: impl AsRef<Path>, target_len: usize) -> Result<Dataset> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(format_err(dir, "no .wav files found"));
    }
    let mut ds = Dataset {
        names: Vec::new(),
        items: Vec::new(),
    };
    for p in paths {
        let x = wav_read(&p)?;
        if x.is_empty() {
            return Err(format_err(&p, "empty recording"));
        }
        ds.names.push(p.file_name().unwrap().to_string_lossy().into_owned());
        ds.items.push(fit_length(&x, target_len));
    }
    Ok(ds)
}

/// [`dataset_load`] at the critic's input length.
pub fn dataset_load_default(dir: impl AsRef<Path>) -> Result<Dataset> {
    dataset_load(dir, CRITIC_INPUT_LEN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_policy() {
        assert_eq!(fit_length(&[1.0, 2.0], 5), vec![0.0, 1.0, 2.0, 0.0, 0.0]);
        assert_eq!(fit_length(&[1.0, 2.0, 3.0, 4.0, 5.0], 3), vec![2.0, 3.0, 4.0]);
        assert_eq!(fit_length(&[1.0, 2.0, 3.0], 3), vec![1.0, 2.0, 3.0]);
    }
}
