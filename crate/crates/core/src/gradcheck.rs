//! Finite-difference suites for the models and the gradient penalty.

use std::str::FromStr;

use artgan_autodiff::gradcheck::{check_directions, GradcheckReport, FD_STEP};
use artgan_autodiff::suites::{op_suites, SuiteReport, COMPOSITE_TOL};
use artgan_autodiff::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{contract, Error, Result};
use crate::models::{Critic, CriticConfig, Generator, GeneratorConfig, PhysicalKind, PhysicalModel, PhysicalModelSpec, Shuffle};
use crate::trainer::gp_loss;

/// Random directions probed per instance.
const DIRECTIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Autodiff,
    Generator,
    Critic,
    Physical,
    Gp,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 5] = [Self::Autodiff, Self::Generator, Self::Critic, Self::Physical, Self::Gp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Autodiff => "autodiff",
            Self::Generator => "generator",
            Self::Critic => "critic",
            Self::Physical => "physical",
            Self::Gp => "gp",
        }
    }
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| contract(format!("unknown gradcheck module {s:?} (autodiff|generator|critic|physical|gp)")))
    }
}

type Instance = fn(&mut ChaCha8Rng) -> Result<GradcheckReport>;

/// Run `trials` seeded instances of the suites behind `kind`.
pub fn run_suites(kind: SuiteKind, trials: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    let one = |name, tolerance, instance: Instance| -> Result<SuiteReport> {
        let mut report = GradcheckReport::empty();
        for i in 0..trials as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
            report = report.merge(instance(&mut rng)?);
        }
        Ok(SuiteReport { name, report, tolerance })
    };
    match kind {
        SuiteKind::Autodiff => Ok(op_suites(trials, seed)?),
        SuiteKind::Generator => Ok(vec![one("generator", COMPOSITE_TOL, generator)?]),
        SuiteKind::Critic => Ok(vec![one("critic", COMPOSITE_TOL, critic)?]),
        SuiteKind::Physical => Ok(vec![
            one("physical.source_filter", COMPOSITE_TOL, source_filter)?,
            one("physical.frozen_random", COMPOSITE_TOL, frozen_random)?,
        ]),
        SuiteKind::Gp => Ok(vec![one("gp_loss", COMPOSITE_TOL, gp)?]),
    }
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Result<Tensor> {
    let n = shape.iter().product();
    Ok(Tensor::new((0..n).map(|_| rng.gen_range(lo..hi)).collect(), shape)?)
}

fn weighted(y: &Tensor, w: &Tensor) -> Result<Tensor> {
    Ok(y.mul(w)?.sum())
}

/// Same topology as the real generator with tiny widths and lengths.
fn tiny_generator(rng: &mut ChaCha8Rng) -> GeneratorConfig {
    let mut cfg = GeneratorConfig::scaled(512);
    cfg.latent_dim = rng.gen_range(2..6);
    cfg.init_len = rng.gen_range(1..3);
    cfg.kernel = rng.gen_range(2..6);
    for c in &mut cfg.channels[..5] {
        *c = rng.gen_range(1..3);
    }
    cfg
}

fn tiny_critic(rng: &mut ChaCha8Rng, phase_shuffle: usize) -> CriticConfig {
    let mut cfg = CriticConfig::scaled(512);
    cfg.channels = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..4)).collect();
    // every shuffled layer keeps at least two frames
    cfg.input_len = rng.gen_range(2..8) * cfg.stride.pow(cfg.channels.len() as u32 - 1) + rng.gen_range(0..cfg.stride);
    cfg.kernel = rng.gen_range(2..8);
    cfg.phase_shuffle = phase_shuffle;
    cfg
}

fn generator(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let g = Generator::new(tiny_generator(rng))?;
    let params = g.init_params(rng)?;
    let b = rng.gen_range(1..3);
    let z = rand_tensor(rng, &[b, g.config().latent_dim], -1.0, 1.0)?;
    let r = rand_tensor(rng, &[b, 13, g.config().output_len()], -1.0, 1.0)?;
    let mut inputs = vec![z];
    inputs.extend(params.leaves(false));
    let report = check_directions(
        |t| weighted(&g.forward(&t[1..], &t[0])?.ema, &r),
        &inputs,
        DIRECTIONS,
        FD_STEP,
        rng,
    )?;
    Ok(report)
}

fn critic(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let c = Critic::new(tiny_critic(rng, 1))?;
    let params = c.init_params(rng)?;
    let b = rng.gen_range(1..3);
    let audio = rand_tensor(rng, &[b, 1, c.config().input_len], -1.0, 1.0)?;
    let shuffle_seed = rng.gen();
    let mut inputs = vec![audio];
    inputs.extend(params.leaves(false));
    let report = check_directions(
        |t| {
            // identical shifts on every evaluation
            let mut srng = ChaCha8Rng::seed_from_u64(shuffle_seed);
            Result::Ok(c.forward(&t[1..], &t[0], Shuffle::Random(&mut srng))?.sum())
        },
        &inputs,
        DIRECTIONS,
        FD_STEP,
        rng,
    )?;
    Ok(report)
}

fn physical(rng: &mut ChaCha8Rng, kind: PhysicalKind) -> Result<GradcheckReport> {
    let model = PhysicalModel::new(PhysicalModelSpec::new(kind, rng.gen()))?;
    let (b, t) = (rng.gen_range(1..3), rng.gen_range(2..5));
    let ema = rand_tensor(rng, &[b, 13, t], -0.9, 0.9)?;
    let r = rand_tensor(rng, &[b, 1, 80 * t], -1.0, 1.0)?;
    let report = check_directions(
        |x| weighted(&model.forward(&x[0])?, &r),
        &[ema],
        DIRECTIONS,
        FD_STEP,
        rng,
    )?;
    Ok(report)
}

fn source_filter(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    physical(rng, PhysicalKind::SourceFilter)
}

fn frozen_random(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    physical(rng, PhysicalKind::FrozenRandom)
}

/// Gradient of the penalty w.r.t. critic parameters (second order).
fn gp(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let c = Critic::new(tiny_critic(rng, 0))?;
    let params = c.init_params(rng)?;
    let b = rng.gen_range(1..3);
    let len = c.config().input_len;
    let real = rand_tensor(rng, &[b, 1, len], -1.0, 1.0)?;
    let fake = rand_tensor(rng, &[b, 1, len], -1.0, 1.0)?;
    let eps: Vec<f64> = (0..b).map(|_| rng.gen_range(0.0..1.0)).collect();
    let report = check_directions(
        |t| gp_loss(|x| c.forward(t, x, Shuffle::Off), &real, &fake, &eps),
        &params.leaves(false),
        DIRECTIONS,
        FD_STEP,
        rng,
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse() {
        for k in SuiteKind::ALL {
            assert_eq!(k.name().parse::<SuiteKind>().unwrap(), k);
        }
        assert!("nope".parse::<SuiteKind>().is_err());
    }

    #[test]
    fn zero_trials() {
        for k in SuiteKind::ALL {
            assert!(run_suites(k, 0, 1).unwrap().iter().all(|s| s.report.checks == 0));
        }
    }
}
