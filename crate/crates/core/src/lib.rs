//! Articulatory GAN: a generator of EMA trajectories, a frozen
//! EMA-to-waveform model, a WGAN-GP critic on raw audio, and the analysis
//! tools used to compare generated and recorded articulation.

pub mod analysis;
pub mod ema;
pub mod error;
pub mod gradcheck;
pub mod io;
pub mod models;
pub mod params;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
