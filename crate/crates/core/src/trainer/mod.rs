//! WGAN-GP training with the frozen physical model between generator and
//! critic.

pub mod adam;
pub mod gp;
pub mod sink;

use artgan_autodiff::{grad, no_grad, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::io::checkpoint::{Checkpoint, RngState};
use crate::io::dataset::Dataset;
use crate::models::critic::{Critic, CriticConfig, Shuffle, PHASE_SHUFFLE};
use crate::models::generator::{sample_latent, Generator, GeneratorConfig};
use crate::models::physical::{PhysicalKind, PhysicalModel, PhysicalModelSpec};
use crate::params::ModelParams;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gp::gp_loss;
pub use sink::{DirSink, MemorySink, MetricsRow, TrainSink, METRICS_HEADER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub total_steps: u64,
    pub n_critic: usize,
    pub gp_lambda: f64,
    pub lr_generator: f64,
    pub lr_critic: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub physical_kind: PhysicalKind,
    pub physical_seed: u64,
    /// 0 disables periodic checkpoints.
    pub checkpoint_every: u64,
    /// Divisor applied to every hidden width of both networks.
    pub model_scale: usize,
    pub phase_shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 8,
            total_steps: 2000,
            n_critic: 5,
            gp_lambda: 10.0,
            lr_generator: 1e-4,
            lr_critic: 1e-4,
            adam_beta1: 0.5,
            adam_beta2: 0.9,
            adam_eps: 1e-8,
            seed: 0,
            physical_kind: PhysicalKind::SourceFilter,
            physical_seed: 0,
            checkpoint_every: 0,
            model_scale: 1,
            phase_shuffle: true,
        }
    }
}

impl TrainConfig {
    /// Parse and validate; missing fields take their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| contract(format!("bad training config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(contract("batch_size must be at least 1"));
        }
        if self.n_critic == 0 {
            return Err(contract("n_critic must be at least 1"));
        }
        if !(self.gp_lambda >= 0.0) {
            return Err(contract("gp_lambda must be non-negative"));
        }
        if self.model_scale == 0 {
            return Err(contract("model_scale must be at least 1"));
        }
        for (name, v) in [("lr_generator", self.lr_generator), ("lr_critic", self.lr_critic)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(contract(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        GeneratorConfig::scaled(self.model_scale)
    }

    pub fn critic_config(&self) -> CriticConfig {
        let mut c = CriticConfig::scaled(self.model_scale);
        c.phase_shuffle = if self.phase_shuffle { PHASE_SHUFFLE } else { 0 };
        c
    }

    pub fn physical_spec(&self) -> PhysicalModelSpec {
        PhysicalModelSpec::new(self.physical_kind, self.physical_seed)
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticStats {
    pub loss: f64,
    pub gp: f64,
    pub d_real: f64,
    pub d_fake: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorStats {
    pub loss: f64,
    pub grad_norm: f64,
}

pub struct Trainer {
    config: TrainConfig,
    generator: Generator,
    critic: Critic,
    physical: PhysicalModel,
    gen_params: ModelParams,
    critic_params: ModelParams,
    gen_adam: AdamState,
    critic_adam: AdamState,
    rng: ChaCha8Rng,
    step: u64,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let generator = Generator::new(config.generator_config())?;
        let critic = Critic::new(config.critic_config())?;
        let physical = PhysicalModel::new(config.physical_spec())?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let gen_params = generator.init_params(&mut rng)?;
        let critic_params = critic.init_params(&mut rng)?;
        Ok(Self {
            gen_adam: AdamState::new(&gen_params),
            critic_adam: AdamState::new(&critic_params),
            config,
            generator,
            critic,
            physical,
            gen_params,
            critic_params,
            rng,
            step: 0,
        })
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let config: TrainConfig = serde_json::from_str(&ck.config_json)
            .map_err(|e| Error::Checkpoint(format!("bad config: {e}")))?;
        config.validate()?;
        let generator = Generator::new(config.generator_config())?;
        let critic = Critic::new(config.critic_config())?;
        let missing = |what: &str| Error::Checkpoint(format!("missing {what}"));
        let gen_params = ck.group("generator").ok_or_else(|| missing("generator params"))?.clone();
        let critic_params = ck.group("critic").ok_or_else(|| missing("critic params"))?.clone();
        let phys_params = ck.group("physical").ok_or_else(|| missing("physical params"))?.clone();
        generator.check_params(&gen_params)?;
        critic.check_params(&critic_params)?;
        let physical = PhysicalModel::from_params(config.physical_spec(), phys_params)?;
        let gen_adam = ck.optimizer("generator").ok_or_else(|| missing("generator optimizer"))?.clone();
        let critic_adam = ck.optimizer("critic").ok_or_else(|| missing("critic optimizer"))?.clone();
        if !gen_adam.matches(&gen_params) || !critic_adam.matches(&critic_params) {
            return Err(Error::Checkpoint("optimizer state does not match parameters".into()));
        }
        let mut rng = ChaCha8Rng::from_seed(ck.rng.seed);
        rng.set_stream(ck.rng.stream);
        rng.set_word_pos(ck.rng.word_pos);
        Ok(Self {
            config,
            generator,
            critic,
            physical,
            gen_params,
            critic_params,
            gen_adam,
            critic_adam,
            rng,
            step: ck.step,
        })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config_json: serde_json::to_string(&self.config).expect("config serialises"),
            step: self.step,
            rng: RngState {
                seed: self.rng.get_seed(),
                stream: self.rng.get_stream(),
                word_pos: self.rng.get_word_pos(),
            },
            groups: vec![
                ("generator".into(), self.gen_params.clone()),
                ("critic".into(), self.critic_params.clone()),
                ("physical".into(), self.physical.params().clone()),
            ],
            optimizers: vec![
                ("generator".into(), self.gen_adam.clone()),
                ("critic".into(), self.critic_adam.clone()),
            ],
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Extend or shorten a (resumed) run.
    pub fn set_total_steps(&mut self, steps: u64) {
        self.config.total_steps = steps;
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn critic(&self) -> &Critic {
        &self.critic
    }

    pub fn physical(&self) -> &PhysicalModel {
        &self.physical
    }

    pub fn generator_params(&self) -> &ModelParams {
        &self.gen_params
    }

    pub fn critic_params(&self) -> &ModelParams {
        &self.critic_params
    }

    pub fn critic_params_mut(&mut self) -> &mut ModelParams {
        &mut self.critic_params
    }

    pub fn generator_params_mut(&mut self) -> &mut ModelParams {
        &mut self.gen_params
    }

    /// `G` then `A` on `z`, without recording: `(ema [B×13×256], audio [B×1×20480])`.
    pub fn generate(&self, z: &Tensor) -> Result<(Tensor, Tensor)> {
        let _guard = no_grad();
        let ema = self.generator.forward(&self.gen_params.leaves(false), z)?.ema;
        let audio = self.physical.forward(&ema)?;
        Ok((ema, audio))
    }

    /// Critic scores `[B]` for an audio batch, shuffling off.
    pub fn score(&self, audio: &Tensor) -> Result<Vec<f64>> {
        let _guard = no_grad();
        Ok(self
            .critic
            .forward(&self.critic_params.leaves(false), audio, Shuffle::Off)?
            .to_vec())
    }

    /// Draw a `[B×1×L]` batch from the dataset with replacement.
    pub fn sample_real(&mut self, data: &Dataset) -> Result<Tensor> {
        let len = self.critic.config().input_len;
        if data.is_empty() {
            return Err(contract("empty dataset"));
        }
        if let Some(bad) = data.items.iter().position(|x| x.len() != len) {
            return Err(contract(format!(
                "dataset item {} has {} samples, expected {len}",
                data.names.get(bad).map_or("?", String::as_str),
                data.items[bad].len()
            )));
        }
        let b = self.config.batch_size;
        let mut out = Vec::with_capacity(b * len);
        for _ in 0..b {
            out.extend_from_slice(&data.items[self.rng.gen_range(0..data.len())]);
        }
        Ok(Tensor::new(out, &[b, 1, len])?)
    }

    /// One critic update against `real [B×1×L]`.
    pub fn critic_step(&mut self, real: &Tensor) -> Result<CriticStats> {
        let b = real.shape()[0];
        let z = sample_latent(b, &mut self.rng)?;
        let (_, fake) = self.generate(&z)?;
        let leaves = self.critic_params.leaves(true);
        let shuffle = self.critic.config().phase_shuffle > 0;
        let d_real = self.critic.forward(&leaves, real, shuffle_of(shuffle, &mut self.rng))?.mean();
        let d_fake = self.critic.forward(&leaves, &fake, shuffle_of(shuffle, &mut self.rng))?.mean();
        let eps: Vec<f64> = (0..b).map(|_| self.rng.gen_range(0.0..1.0)).collect();
        let critic = &self.critic;
        let gp = gp_loss(|x| critic.forward(&leaves, x, Shuffle::Off), real, &fake, &eps)?;
        let loss = d_fake.sub(&d_real)?.add(&gp.scale(self.config.gp_lambda))?;
        let stats = CriticStats {
            loss: loss.item(),
            gp: gp.item(),
            d_real: d_real.item(),
            d_fake: d_fake.item(),
            grad_norm: 0.0,
        };
        if ![stats.loss, stats.gp, stats.d_real, stats.d_fake].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                step: self.step + 1,
                phase: "critic",
                parts: format!(
                    "d_real={} d_fake={} gp={} loss={}",
                    stats.d_real, stats.d_fake, stats.gp, stats.loss
                ),
            });
        }
        let grads = flat_grads(&loss, &leaves)?;
        let grad_norm = global_norm(&grads);
        adam_step(
            &mut self.critic_params,
            &grads,
            &mut self.critic_adam,
            &self.config.adam(self.config.lr_critic),
        )?;
        Ok(CriticStats { grad_norm, ..stats })
    }

    /// One generator update: minimise `−mean D(A(G(z)))`.
    pub fn generator_step(&mut self) -> Result<GeneratorStats> {
        let z = sample_latent(self.config.batch_size, &mut self.rng)?;
        let leaves = self.gen_params.leaves(true);
        let ema = self.generator.forward(&leaves, &z)?.ema;
        let audio = self.physical.forward(&ema)?;
        let shuffle = self.critic.config().phase_shuffle > 0;
        let score = self.critic.forward(
            &self.critic_params.leaves(false),
            &audio,
            shuffle_of(shuffle, &mut self.rng),
        )?;
        let loss = score.mean().neg();
        if !loss.item().is_finite() {
            return Err(Error::NonFinite {
                step: self.step + 1,
                phase: "generator",
                parts: format!("loss={}", loss.item()),
            });
        }
        let grads = flat_grads(&loss, &leaves)?;
        let grad_norm = global_norm(&grads);
        adam_step(
            &mut self.gen_params,
            &grads,
            &mut self.gen_adam,
            &self.config.adam(self.config.lr_generator),
        )?;
        Ok(GeneratorStats {
            loss: loss.item(),
            grad_norm,
        })
    }

    /// `n_critic` critic updates followed by one generator update.
    pub fn train_step(&mut self, data: &Dataset) -> Result<MetricsRow> {
        let n = self.config.n_critic as f64;
        let mut acc = [0.0; 4];
        for _ in 0..self.config.n_critic {
            let real = self.sample_real(data)?;
            let s = self.critic_step(&real)?;
            acc[0] += s.loss;
            acc[1] += s.gp;
            acc[2] += s.d_real - s.d_fake;
            acc[3] += s.grad_norm;
        }
        let g = self.generator_step()?;
        self.step += 1;
        Ok(MetricsRow {
            step: self.step,
            critic_loss: acc[0] / n,
            gen_loss: g.loss,
            gp: acc[1] / n,
            wasserstein_gap: acc[2] / n,
            grad_norm_g: g.grad_norm,
            grad_norm_d: acc[3] / n,
        })
    }

    /// Train until `config.total_steps`, reporting every step and
    /// checkpointing every `checkpoint_every` steps and at the end.
    pub fn run(&mut self, data: &Dataset, sink: &mut dyn TrainSink) -> Result<()> {
        if data.is_empty() {
            return Err(contract("empty dataset"));
        }
        let every = self.config.checkpoint_every;
        while self.step < self.config.total_steps {
            let row = self.train_step(data)?;
            sink.on_step(&row)?;
            if every > 0 && self.step % every == 0 {
                sink.on_checkpoint(&self.to_checkpoint())?;
            }
        }
        if every == 0 || self.step % every != 0 {
            sink.on_checkpoint(&self.to_checkpoint())?;
        }
        Ok(())
    }
}

fn shuffle_of(enabled: bool, rng: &mut ChaCha8Rng) -> Shuffle<'_> {
    if enabled {
        Shuffle::Random(rng)
    } else {
        Shuffle::Off
    }
}

fn flat_grads(loss: &Tensor, leaves: &[Tensor]) -> Result<Vec<Vec<f64>>> {
    let refs: Vec<&Tensor> = leaves.iter().collect();
    Ok(grad(loss, &refs, false)?.into_iter().map(|g| g.to_vec()).collect())
}

fn global_norm(grads: &[Vec<f64>]) -> f64 {
    grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
}
