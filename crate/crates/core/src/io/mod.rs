pub mod checkpoint;
pub mod dataset;
pub mod ema_csv;
pub mod wav;

pub use checkpoint::{checkpoint_load, checkpoint_save, Checkpoint, RngState};
pub use dataset::{dataset_load, dataset_load_default, fit_length, Dataset};
pub use ema_csv::{ema_read, ema_write};
pub use wav::{wav_read, wav_write};
