//! Metrics rows and where they go.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{io_err, Result};
use crate::io::checkpoint::{checkpoint_save, Checkpoint};

pub const METRICS_HEADER: &str = "step,critic_loss,gen_loss,gp,wasserstein_gap,grad_norm_g,grad_norm_d";

/// Per-step summary; critic columns average over the step's critic updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub critic_loss: f64,
    pub gen_loss: f64,
    pub gp: f64,
    /// `mean D(real) − mean D(fake)`.
    pub wasserstein_gap: f64,
    pub grad_norm_g: f64,
    pub grad_norm_d: f64,
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.step, self.critic_loss, self.gen_loss, self.gp, self.wasserstein_gap, self.grad_norm_g, self.grad_norm_d
        )
    }

    pub fn all_finite(&self) -> bool {
        [
            self.critic_loss,
            self.gen_loss,
            self.gp,
            self.wasserstein_gap,
            self.grad_norm_g,
            self.grad_norm_d,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

pub trait TrainSink {
    fn on_step(&mut self, row: &MetricsRow) -> Result<()>;
    fn on_checkpoint(&mut self, ck: &Checkpoint) -> Result<()>;
}

/// Keeps rows and the serialised checkpoints in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub rows: Vec<MetricsRow>,
    pub checkpoints: Vec<(u64, Vec<u8>)>,
}

impl MemorySink {
    pub fn metrics_csv(&self) -> String {
        let mut s = format!("{METRICS_HEADER}\n");
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }
}

impl TrainSink for MemorySink {
    fn on_step(&mut self, row: &MetricsRow) -> Result<()> {
        self.rows.push(*row);
        Ok(())
    }

    fn on_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        self.checkpoints.push((ck.step, ck.to_bytes()));
        Ok(())
    }
}

/// Writes `metrics.csv` and `step_NNNNNNNN.ckpt` files into a directory;
/// the latest checkpoint is also copied to `final.ckpt`.
pub struct DirSink {
    dir: PathBuf,
    metrics: BufWriter<File>,
}

impl DirSink {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join("metrics.csv");
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut metrics = BufWriter::new(file);
        writeln!(metrics, "{METRICS_HEADER}").map_err(io_err(&path))?;
        Ok(Self { dir, metrics })
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.dir.join("metrics.csv")
    }
}

impl TrainSink for DirSink {
    fn on_step(&mut self, row: &MetricsRow) -> Result<()> {
        let path = self.metrics_path();
        writeln!(self.metrics, "{}", row.csv_line()).map_err(io_err(&path))?;
        self.metrics.flush().map_err(io_err(&path))
    }

    fn on_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        checkpoint_save(self.dir.join(format!("step_{:08}.ckpt", ck.step)), ck)?;
        checkpoint_save(self.dir.join("final.ckpt"), ck)
    }
}
