//! `artgan`: train, generate, synthesise, analyse and verify.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use artgan::analysis::{
    dtw_corr_pipeline, loess_smooth, odds_ratio_test, trajectory_export, LoessDegree, PipelineOptions,
    DEFAULT_REAL_SCALE,
};
use artgan::ema::{EmaTrajectory, NUM_CHANNELS};
use artgan::gradcheck::{run_suites, SuiteKind};
use artgan::io::{checkpoint_load, dataset_load_default, ema_read, ema_write, wav_write, Dataset};
use artgan::models::{sample_latent, PhysicalKind, PhysicalModel, PhysicalModelSpec};
use artgan::synthetic::{synthetic_dataset, SYNTHETIC_WORDS};
use artgan::trainer::{DirSink, TrainConfig, Trainer};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "artgan", version, about = "Articulatory GAN toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train generator and critic; writes metrics.csv and checkpoints.
    Train(TrainArgs),
    /// Sample EMA trajectories and their audio from a checkpoint.
    Generate(GenerateArgs),
    /// Render an EMA CSV file to a WAV file.
    Synth(SynthArgs),
    /// Trajectory analysis.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Finite-difference gradient checks.
    Gradcheck(GradcheckArgs),
    /// Write the eight built-in synthetic words (WAV and EMA CSV).
    ToyData(ToyDataArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of 16 kHz mono WAV files.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    phys: Option<PhysicalKind>,
    #[arg(long)]
    phys_seed: Option<u64>,
    /// Divide every hidden width by this factor.
    #[arg(long)]
    scale: Option<usize>,
    #[arg(long)]
    n_critic: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    #[arg(long)]
    no_phase_shuffle: bool,
    /// JSON training config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Continue from a checkpoint; its config is used, `--steps` may extend it.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 1)]
    num: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    ema: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "source-filter")]
    phys: PhysicalKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SmoothingArgs {
    /// LOESS span as a fraction of the series length.
    #[arg(long, default_value_t = 0.2)]
    span: f64,
    #[arg(long, default_value_t = 1)]
    degree: u32,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Per-channel DTW cost and Pearson r between two EMA files.
    DtwCorr {
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        real: PathBuf,
        #[command(flatten)]
        smoothing: SmoothingArgs,
        /// Leave the recorded trajectory unsmoothed.
        #[arg(long)]
        raw_real: bool,
        #[arg(long)]
        z_normalize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Odds ratio and two-sided Fisher exact p for a 2×2 table.
    OrTest { a: u64, b: u64, c: u64, d: u64 },
    /// LOESS-smooth every channel of an EMA file.
    Smooth {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        smoothing: SmoothingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-place 2D path CSVs for plotting.
    #[command(name = "export-2d")]
    Export2d {
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        real: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_REAL_SCALE)]
        real_scale: f64,
        #[command(flatten)]
        smoothing: SmoothingArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value = "autodiff")]
    module: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ToyDataArgs {
    #[arg(long)]
    out: PathBuf,
    /// Seed of the source-filter model used for rendering.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Writes to stdout; a closed pipe ends the process quietly.
fn stdout_write(text: &str) {
    let mut o = std::io::stdout().lock();
    if let Err(e) = o.write_all(text.as_bytes()).and_then(|_| o.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

macro_rules! out {
    ($($t:tt)*) => { stdout_write(&format!($($t)*)) };
}

macro_rules! outln {
    ($($t:tt)*) => { stdout_write(&(format!($($t)*) + "\n")) };
}

/// Joins the error chain, dropping causes already quoted by their parent.
fn one_line(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if parts.last().is_some_and(|p| p.contains(&text)) {
            continue;
        }
        parts.push(text);
    }
    parts.join(": ").replace('\n', " ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Train(a) => train(a)?,
        Command::Generate(a) => generate(a)?,
        Command::Synth(a) => synth(a)?,
        Command::Analyze(a) => analyze(a)?,
        Command::Gradcheck(a) => return gradcheck(a),
        Command::ToyData(a) => toy_data(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn train(a: TrainArgs) -> Result<()> {
    let mut trainer = match &a.resume {
        Some(path) => {
            let ck = checkpoint_load(path)?;
            let mut t = Trainer::from_checkpoint(&ck)?;
            if let Some(steps) = a.steps {
                t.set_total_steps(steps);
            }
            t
        }
        None => {
            let mut cfg = match &a.config {
                Some(p) => {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    TrainConfig::from_json(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => TrainConfig::default(),
            };
            apply_overrides(&mut cfg, &a);
            Trainer::new(cfg)?
        }
    };
    let data = dataset_load_default(&a.data)?;
    let mut sink = DirSink::create(&a.out)?;
    trainer.run(&data, &mut sink)?;
    outln!(
        "trained to step {}; metrics in {}",
        trainer.step(),
        sink.metrics_path().display()
    );
    Ok(())
}

fn apply_overrides(cfg: &mut TrainConfig, a: &TrainArgs) {
    if let Some(v) = a.steps {
        cfg.total_steps = v;
    }
    if let Some(v) = a.batch {
        cfg.batch_size = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.phys {
        cfg.physical_kind = v;
    }
    if let Some(v) = a.phys_seed {
        cfg.physical_seed = v;
    }
    if let Some(v) = a.scale {
        cfg.model_scale = v;
    }
    if let Some(v) = a.n_critic {
        cfg.n_critic = v;
    }
    if let Some(v) = a.checkpoint_every {
        cfg.checkpoint_every = v;
    }
    if a.no_phase_shuffle {
        cfg.phase_shuffle = false;
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let trainer = Trainer::from_checkpoint(&checkpoint_load(&a.checkpoint)?)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    if a.num == 0 {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let z = sample_latent(a.num, &mut rng)?;
    let (ema, audio) = trainer.generate(&z)?;
    let len = audio.shape()[2];
    for i in 0..a.num {
        ema_write(a.out.join(format!("gen_{i:04}.csv")), &EmaTrajectory::from_tensor(&ema, i)?)?;
        wav_write(a.out.join(format!("gen_{i:04}.wav")), &audio.data()[i * len..(i + 1) * len])?;
    }
    outln!("wrote {} samples to {}", a.num, a.out.display());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let ema = ema_read(&a.ema)?;
    let model = PhysicalModel::new(PhysicalModelSpec::new(a.phys, a.seed))?;
    let audio = model.synthesize(&ema)?;
    wav_write(&a.out, &audio)?;
    outln!("wrote {} samples to {}", audio.len(), a.out.display());
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            out!("{text}");
            Ok(())
        }
    }
}

fn analyze(cmd: AnalyzeCommand) -> Result<()> {
    match cmd {
        AnalyzeCommand::DtwCorr {
            gen,
            real,
            smoothing,
            raw_real,
            z_normalize,
            out,
        } => {
            let opts = PipelineOptions {
                span: smoothing.span,
                degree: LoessDegree::try_from(smoothing.degree)?,
                smooth_real: !raw_real,
                z_normalize,
            };
            let report = dtw_corr_pipeline(&ema_read(&gen)?, &ema_read(&real)?, &opts)?;
            emit(&report.to_csv(), out.as_deref())
        }
        AnalyzeCommand::OrTest { a, b, c, d } => {
            let t = odds_ratio_test(a, b, c, d);
            let or = t.odds_ratio.map_or_else(|| "NA".to_string(), |v| v.to_string());
            outln!("odds_ratio,p_value\n{or},{}", t.p_value);
            Ok(())
        }
        AnalyzeCommand::Smooth { input, smoothing, out } => {
            let ema = ema_read(&input)?;
            let degree = LoessDegree::try_from(smoothing.degree)?;
            let channels = (0..NUM_CHANNELS)
                .map(|c| loess_smooth(ema.channel(c), smoothing.span, degree))
                .collect::<artgan::Result<Vec<_>>>()?;
            let smoothed = EmaTrajectory::new(channels)?;
            match out {
                Some(p) => ema_write(&p, &smoothed)?,
                None => out!("{}", artgan::io::ema_csv::ema_to_csv(&smoothed)),
            }
            Ok(())
        }
        AnalyzeCommand::Export2d {
            gen,
            real,
            real_scale,
            smoothing,
            out,
        } => {
            let gen = ema_read(&gen)?;
            let real = real.map(ema_read).transpose()?;
            let files = trajectory_export(
                &gen,
                real.as_ref(),
                real_scale,
                smoothing.span,
                LoessDegree::try_from(smoothing.degree)?,
            )?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (place, text) in files {
                emit(&text, Some(&out.join(format!("{place}.csv"))))?;
            }
            Ok(())
        }
    }
}

fn gradcheck(a: GradcheckArgs) -> Result<ExitCode> {
    let kinds: Vec<SuiteKind> = if a.module == "all" {
        SuiteKind::ALL.to_vec()
    } else {
        vec![a.module.parse()?]
    };
    let mut ok = true;
    outln!("suite,checks,max_rel_err,tolerance,status");
    for kind in kinds {
        for s in run_suites(kind, a.trials, a.seed)? {
            let status = if s.passed() { "pass" } else { "FAIL" };
            ok &= s.passed();
            outln!(
                "{},{},{:e},{:e},{status}",
                s.name, s.report.checks, s.report.max_rel_err, s.tolerance
            );
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn toy_data(a: ToyDataArgs) -> Result<()> {
    let (Dataset { names, items }, emas) = synthetic_dataset(a.seed)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for ((name, audio), (word, ema)) in names.iter().zip(&items).zip(SYNTHETIC_WORDS.iter().zip(&emas)) {
        wav_write(a.out.join(name), audio)?;
        let ema_dir = a.out.join("ema");
        fs::create_dir_all(&ema_dir).with_context(|| format!("creating {}", ema_dir.display()))?;
        ema_write(ema_dir.join(format!("{word}.csv")), ema)?;
    }
    outln!("wrote {} words to {}", names.len(), a.out.display());
    Ok(())
}
