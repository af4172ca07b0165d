//! The end-to-end pipeline shared by the `train`, `eval` and `noise-sweep`
//! commands: normalize, split, pick the segment count, train, test.

use ssam_core::data::{split, znormalize, LabeledDataset, SplitSpec};
use ssam_core::model::{ModelConfig, Network};
use ssam_core::rng::derive_seed;
use ssam_core::training::{
    evaluate, noise_sweep, search_k, train_with, EpochRecord, Evaluation, KSearch, TrainConfig,
    TrainHistory,
};

/// Seed used when none is given on the command line.
pub const DEFAULT_SEED: u64 = 20_240_101;

const INIT_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// Normalized data and its seeded 6:2:2 split.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub data: LabeledDataset,
    pub split: SplitSpec,
}

pub fn prepare(raw: &LabeledDataset, seed: u64) -> Prepared {
    let data = znormalize(raw);
    let split = split(&data, seed);
    Prepared { data, split }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segments {
    Fixed(usize),
    Search,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// `None` trains the base network without the SSAM stage.
    pub segments: Option<Segments>,
    pub train: TrainConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub network: Network,
    pub history: TrainHistory,
    pub search: Option<KSearch>,
    pub test: Evaluation,
}

/// Trains one network on `prepared.split.train` and reports its test
/// metrics. The network is initialized from a stream derived from
/// `options.train.seed`.
pub fn run(prepared: &Prepared, options: &RunOptions) -> ssam_core::Result<RunOutcome> {
    run_with(prepared, options, |_| {})
}

pub fn run_with(
    prepared: &Prepared,
    options: &RunOptions,
    on_epoch: impl FnMut(&EpochRecord),
) -> ssam_core::Result<RunOutcome> {
    let Prepared { data, split } = prepared;
    let template = ModelConfig::new(data.series_len(), data.class_count(), 1);
    let (config, search) = match options.segments {
        None => (template.without_ssam(), None),
        Some(Segments::Fixed(k)) => (
            ModelConfig {
                segments: k,
                ..template
            },
            None,
        ),
        Some(Segments::Search) => {
            let s = search_k(data, split, &template, &options.train)?;
            (
                ModelConfig {
                    segments: s.best,
                    ..template
                },
                Some(s),
            )
        }
    };
    let mut network = Network::new(&config, derive_seed(options.train.seed, INIT_STREAM))?;
    let history = train_with(&mut network, data, split, &options.train, on_epoch)?;
    let test = evaluate(&mut network, data, &split.test)?;
    Ok(RunOutcome {
        network,
        history,
        search,
        test,
    })
}

/// Test-split metrics of a trained network.
pub fn test_metrics(net: &mut Network, prepared: &Prepared) -> ssam_core::Result<Evaluation> {
    evaluate(net, &prepared.data, &prepared.split.test)
}

/// Accuracy on noisy copies of the test split.
pub fn test_noise_sweep(
    net: &mut Network,
    prepared: &Prepared,
    levels: &[f64],
    seed: u64,
) -> ssam_core::Result<Vec<(f64, f64)>> {
    noise_sweep(
        net,
        &prepared.data,
        &prepared.split.test,
        levels,
        derive_seed(seed, NOISE_STREAM),
    )
}
