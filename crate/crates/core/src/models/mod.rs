pub mod critic;
pub mod generator;
pub mod physical;

pub use critic::{Critic, CriticConfig, Shuffle};
pub use generator::{sample_latent, Generator, GeneratorConfig, GeneratorOutput};
pub use physical::{PhysicalKind, PhysicalModel, PhysicalModelSpec};
