//! Command-line interface: argument definitions and command bodies.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use ssam_core::data::{gen_synthetic, FreqPreset, SyntheticSpec};
use ssam_core::training::TrainConfig;

use crate::artifacts::{history_csv, k_search_csv, mask_json, metrics_json, noise_csv};
use crate::checkpoint::Checkpoint;
use crate::error::{CliError, Result};
use crate::experiment::{self, Prepared, RunOptions, Segments, DEFAULT_SEED};
use crate::io::{fingerprint, load_ucr, write_atomic, write_ucr};
use crate::manifest::RunManifest;

pub const HISTORY_FILE: &str = "history.csv";
pub const K_SEARCH_FILE: &str = "k_search.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const MASK_FILE: &str = "mask.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "ssam",
    version,
    about = "Spectrum-attention CNNs for time-series classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the three-class two-tone synthetic dataset.
    Synth(SynthArgs),
    /// Train a classifier and write history, checkpoint, masks and metrics.
    Train(TrainArgs),
    /// Print test-split metrics of a checkpoint as JSON.
    Eval(EvalArgs),
    /// Test-split accuracy under additive white noise.
    NoiseSweep(NoiseSweepArgs),
    /// Write the learned spectrum masks of a checkpoint as JSON.
    ExportMask(ExportMaskArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Freqs {
    Paper,
    WellPosed,
}

impl From<Freqs> for FreqPreset {
    fn from(f: Freqs) -> Self {
        match f {
            Freqs::Paper => FreqPreset::Paper,
            Freqs::WellPosed => FreqPreset::WellPosed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "paper")]
    pub freqs: Freqs,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 2000)]
    pub per_class: usize,
    #[arg(long, default_value_t = 100)]
    pub length: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Fixed segment count (default 1).
    #[arg(long, conflicts_with_all = ["search_k", "no_ssam"])]
    pub k: Option<usize>,
    /// Pick the segment count by short validation runs.
    #[arg(long, conflicts_with = "no_ssam")]
    pub search_k: bool,
    /// Train the plain CNN without the spectrum-attention stage.
    #[arg(long)]
    pub no_ssam: bool,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoiseSweepArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated noise levels relative to the data's standard deviation.
    #[arg(long, default_value = "0,0.25,0.5,1,2", value_parser = parse_levels)]
    pub levels: Levels,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportMaskArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Levels(pub Vec<f64>);

fn parse_levels(s: &str) -> std::result::Result<Levels, String> {
    s.split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| format!("bad noise level {t:?}"))?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(format!(
                    "noise level must be finite and non-negative, got {v}"
                ))
            }
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Levels)
}

/// Runs a parsed command. `argv` is recorded verbatim in run manifests.
pub fn execute(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Train(a) => train(&a, argv),
        Command::Eval(a) => {
            print!("{}", eval(&a)?);
            Ok(())
        }
        Command::NoiseSweep(a) => noise_sweep(&a),
        Command::ExportMask(a) => export_mask(&a),
    }
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_per_class: a.per_class,
        length: a.length,
        sigma: a.sigma,
        ..SyntheticSpec::default().with_preset(a.freqs.into())
    };
    write_ucr(&a.out, &gen_synthetic(&spec, a.seed)?)
}

#[derive(Debug, Serialize)]
struct ResolvedTrainConfig<'a> {
    args: &'a TrainArgs,
    lr: f64,
    batch_size: usize,
    l1_coeff: f64,
    k_min: usize,
    k_max: usize,
    search_epochs: usize,
    kernel_sizes: [usize; 2],
    channels: [usize; 2],
}

pub fn train(a: &TrainArgs, argv: &[String]) -> Result<()> {
    let started = chrono::Utc::now();
    let raw = load_ucr(&a.data)?;
    let dataset_hash = fingerprint(&a.data)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let segments = match (a.no_ssam, a.search_k, a.k) {
        (true, _, _) => None,
        (false, true, _) => Some(Segments::Search),
        (false, false, k) => Some(Segments::Fixed(k.unwrap_or(1))),
    };
    let prepared = experiment::prepare(&raw, a.seed);
    let outcome = experiment::run(
        &prepared,
        &RunOptions {
            segments,
            train: cfg.clone(),
        },
    )?;

    std::fs::create_dir_all(&a.out).map_err(CliError::io(&a.out))?;
    let mut outputs = Vec::new();
    let mut emit = |name: &str, text: String| -> Result<()> {
        write_atomic(&a.out.join(name), text.as_bytes())?;
        outputs.push(name.to_string());
        Ok(())
    };
    emit(HISTORY_FILE, history_csv(&outcome.history))?;
    if let Some(search) = &outcome.search {
        emit(K_SEARCH_FILE, k_search_csv(search))?;
    }
    let checkpoint = Checkpoint {
        seed: a.seed,
        network: outcome.network,
    };
    emit(CHECKPOINT_FILE, checkpoint.to_json())?;
    if let Some(mask) = mask_json(&checkpoint.network) {
        emit(MASK_FILE, mask)?;
    }
    emit(
        METRICS_FILE,
        metrics_json(&outcome.test, &checkpoint.network),
    )?;

    let model = checkpoint.network.config();
    let manifest = RunManifest {
        command: argv.to_vec(),
        config: serde_json::to_value(ResolvedTrainConfig {
            args: a,
            lr: cfg.lr,
            batch_size: cfg.batch_size,
            l1_coeff: cfg.l1_coeff,
            k_min: cfg.k_min,
            k_max: cfg.k_max,
            search_epochs: cfg.search_epochs,
            kernel_sizes: model.kernel_sizes,
            channels: model.channels,
        })
        .expect("config serializes"),
        seed: a.seed,
        dataset: a.data.display().to_string(),
        dataset_fingerprint: dataset_hash,
        started_at: started.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        outputs,
    };
    manifest.write(&a.out.join(MANIFEST_FILE))
}

/// Loads a checkpoint and the data it is evaluated on, recomputing the
/// split from the checkpoint's seed.
fn load_pair(checkpoint: &Path, data: &Path) -> Result<(Checkpoint, Prepared)> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let raw = load_ucr(data)?;
    let cfg = ckpt.network.config();
    if cfg.input_length != raw.series_len() {
        return Err(ssam_core::Error::InvalidArgument(format!(
            "checkpoint expects series of length {}, {} has length {}",
            cfg.input_length,
            data.display(),
            raw.series_len()
        ))
        .into());
    }
    if cfg.num_classes < raw.class_count() {
        return Err(ssam_core::Error::InvalidArgument(format!(
            "checkpoint has {} classes, {} has {}",
            cfg.num_classes,
            data.display(),
            raw.class_count()
        ))
        .into());
    }
    let prepared = experiment::prepare(&raw, ckpt.seed);
    Ok((ckpt, prepared))
}

/// Metrics JSON of the checkpoint on the test split.
pub fn eval(a: &EvalArgs) -> Result<String> {
    let (mut ckpt, prepared) = load_pair(&a.checkpoint, &a.data)?;
    let e = experiment::test_metrics(&mut ckpt.network, &prepared)?;
    Ok(metrics_json(&e, &ckpt.network))
}

pub fn noise_sweep(a: &NoiseSweepArgs) -> Result<()> {
    let (mut ckpt, prepared) = load_pair(&a.checkpoint, &a.data)?;
    let rows = experiment::test_noise_sweep(&mut ckpt.network, &prepared, &a.levels.0, ckpt.seed)?;
    write_atomic(&a.out, noise_csv(&rows).as_bytes())
}

pub fn export_mask(a: &ExportMaskArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let text = mask_json(&ckpt.network).ok_or_else(|| {
        ssam_core::Error::InvalidArgument("checkpoint has no spectrum-attention stage".into())
    })?;
    write_atomic(&a.out, text.as_bytes())
}
