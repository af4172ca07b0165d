//! Mini-batch SGD with best-validation checkpointing, the segment-count
//! search, evaluation and the noise-robustness sweep.

use alloc::format;
use alloc::vec::Vec;

use crate::data::{add_noise, batches, LabeledDataset, SplitSpec};
use crate::error::{invalid, Error, Result};
use crate::layers::Mode;
use crate::model::{sgd_step, ModelConfig, Network, Snapshot};
use crate::rng::derive_seed;

/// Batch size used by [`evaluate`]; inference has no batch-size semantics.
const EVAL_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// L1 coefficient applied to SSAM masks.
    pub l1_coeff: f64,
    pub seed: u64,
    pub k_min: usize,
    pub k_max: usize,
    /// Epochs per candidate during the segment-count search.
    pub search_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            epochs: 500,
            batch_size: 128,
            l1_coeff: 0.01,
            seed: 0,
            k_min: 1,
            k_max: 10,
            search_epochs: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(invalid!("learning rate must be positive, got {}", self.lr));
        }
        if self.epochs < 1 {
            return Err(invalid!("epochs must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(invalid!("batch size must be at least 1"));
        }
        if !(self.l1_coeff >= 0.0 && self.l1_coeff.is_finite()) {
            return Err(invalid!(
                "L1 coefficient must be non-negative, got {}",
                self.l1_coeff
            ));
        }
        if self.k_min < 1 || self.k_min > self.k_max {
            return Err(invalid!(
                "invalid segment range {}..={}",
                self.k_min,
                self.k_max
            ));
        }
        if self.search_epochs < 1 {
            return Err(invalid!("search epochs must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean loss and accuracy over the epoch's training batches, measured
    /// in training mode while the weights were being updated.
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch with the lowest validation loss.
    pub best_epoch: usize,
    pub best_checkpoint: Snapshot,
    pub sgd_steps: usize,
}

impl TrainHistory {
    pub fn best(&self) -> &EpochRecord {
        &self.records[self.best_epoch - 1]
    }

    /// First epoch whose validation accuracy reaches `threshold`.
    pub fn epochs_to_val_acc(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.val_acc >= threshold)
            .map(|r| r.epoch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

fn correct(logits: &crate::Tensor, labels: &[usize]) -> usize {
    let c = logits.last_dim();
    logits
        .data()
        .chunks_exact(c)
        .zip(labels)
        .filter(|(row, &l)| argmax(row) == l)
        .count()
}

/// Loss and accuracy on `indices` in inference mode (running batch-norm
/// statistics). Parameter gradients are left untouched.
pub fn evaluate(net: &mut Network, ds: &LabeledDataset, indices: &[usize]) -> Result<Evaluation> {
    if indices.is_empty() {
        return Err(invalid!("cannot evaluate on an empty index set"));
    }
    let mut loss_sum = 0.0;
    let mut hits = 0;
    for batch in batches(ds, indices, EVAL_BATCH, None)? {
        let logits = net.forward(&batch.inputs, Mode::Infer)?;
        let (loss, _) = crate::layers::softmax_cross_entropy(&logits, &batch.labels)?;
        loss_sum += loss * batch.labels.len() as f64;
        hits += correct(&logits, &batch.labels);
    }
    let n = indices.len() as f64;
    Ok(Evaluation {
        loss: loss_sum / n,
        accuracy: hits as f64 / n,
    })
}

fn check_compatible(net: &Network, ds: &LabeledDataset) -> Result<()> {
    let cfg = net.config();
    if cfg.input_length != ds.series_len() {
        return Err(invalid!(
            "model expects series of length {}, dataset has {}",
            cfg.input_length,
            ds.series_len()
        ));
    }
    if cfg.num_classes < ds.class_count() {
        return Err(invalid!(
            "model has {} outputs, dataset has {} classes",
            cfg.num_classes,
            ds.class_count()
        ));
    }
    Ok(())
}

/// [`train_with`] without a progress callback.
pub fn train(
    net: &mut Network,
    ds: &LabeledDataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    train_with(net, ds, split, cfg, |_| {})
}

/// Runs `cfg.epochs` epochs of shuffled mini-batch SGD on `split.train`,
/// evaluating on `split.val` after each epoch. The parameters with the
/// lowest validation loss are snapshotted and restored into `net` at the end.
///
/// Epoch `e` shuffles with `derive_seed(cfg.seed, e)`.
pub fn train_with(
    net: &mut Network,
    ds: &LabeledDataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainHistory> {
    cfg.validate()?;
    check_compatible(net, ds)?;
    if split.train.is_empty() || split.val.is_empty() {
        return Err(invalid!(
            "training and validation partitions must be non-empty"
        ));
    }
    let diverged = |epoch: usize, what: alloc::string::String| Error::Divergence {
        epoch: Some(epoch),
        what,
    };
    net.zero_grad();
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Snapshot)> = None;
    let mut steps = 0;
    for epoch in 1..=cfg.epochs {
        let mut loss_sum = 0.0;
        let mut hits = 0;
        for batch in batches(
            ds,
            &split.train,
            cfg.batch_size,
            Some(derive_seed(cfg.seed, epoch as u64)),
        )? {
            let logits = net.forward(&batch.inputs, Mode::Train)?;
            hits += correct(&logits, &batch.labels);
            let loss = net.backward(&batch.labels)?;
            if !loss.is_finite() {
                return Err(diverged(epoch, format!("non-finite training loss {loss}")));
            }
            loss_sum += loss * batch.labels.len() as f64;
            sgd_step(net, cfg.lr, cfg.l1_coeff).map_err(|e| match e {
                Error::Divergence { what, .. } => diverged(epoch, what),
                other => other,
            })?;
            steps += 1;
        }
        let val = evaluate(net, ds, &split.val)?;
        if !val.loss.is_finite() {
            return Err(diverged(
                epoch,
                format!("non-finite validation loss {}", val.loss),
            ));
        }
        let n = split.train.len() as f64;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / n,
            train_acc: hits as f64 / n,
            val_loss: val.loss,
            val_acc: val.accuracy,
        };
        on_epoch(&record);
        records.push(record);
        if best.as_ref().is_none_or(|(_, l, _)| val.loss < *l) {
            best = Some((epoch, val.loss, net.snapshot()));
        }
    }
    let (best_epoch, _, best_checkpoint) = best.expect("at least one epoch");
    net.restore(&best_checkpoint)?;
    Ok(TrainHistory {
        records,
        best_epoch,
        best_checkpoint,
        sgd_steps: steps,
    })
}

/// Validation loss of one segment-count candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KCandidate {
    pub segments: usize,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSearch {
    pub candidates: Vec<KCandidate>,
    pub best: usize,
}

/// Seed used for the network and shuffling of candidate `k`.
pub fn candidate_seed(master: u64, k: usize) -> u64 {
    derive_seed(master, 0x4b00_0000 + k as u64)
}

/// Segment-count search: for each `K` in `cfg.k_min..=cfg.k_max` that leaves
/// segments of at least two samples, trains a fresh network for
/// `cfg.search_epochs` epochs and records the validation loss after the last
/// epoch. Returns the candidate with the strictly smallest loss, ties going
/// to the smaller `K`.
///
/// `template` supplies everything but the segment count.
pub fn search_k(
    ds: &LabeledDataset,
    split: &SplitSpec,
    template: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<KSearch> {
    search_k_with(ds, split, template, cfg, |_| {})
}

pub fn search_k_with(
    ds: &LabeledDataset,
    split: &SplitSpec,
    template: &ModelConfig,
    cfg: &TrainConfig,
    mut on_candidate: impl FnMut(&KCandidate),
) -> Result<KSearch> {
    cfg.validate()?;
    let mut candidates = Vec::new();
    let mut best: Option<KCandidate> = None;
    for k in cfg.k_min..=cfg.k_max {
        if ds.series_len() / k < 2 {
            continue;
        }
        let model_cfg = ModelConfig {
            segments: k,
            with_ssam: true,
            ..template.clone()
        };
        let seed = candidate_seed(cfg.seed, k);
        let mut net = Network::new(&model_cfg, seed)?;
        let run_cfg = TrainConfig {
            epochs: cfg.search_epochs,
            seed,
            ..cfg.clone()
        };
        let history = train(&mut net, ds, split, &run_cfg)?;
        let last = history.records.last().expect("search epochs >= 1");
        let candidate = KCandidate {
            segments: k,
            val_loss: last.val_loss,
        };
        on_candidate(&candidate);
        if best.is_none_or(|b| candidate.val_loss < b.val_loss) {
            best = Some(candidate);
        }
        candidates.push(candidate);
    }
    let best = best.ok_or_else(|| {
        invalid!(
            "no segment count in {}..={} fits series of length {}",
            cfg.k_min,
            cfg.k_max,
            ds.series_len()
        )
    })?;
    Ok(KSearch {
        candidates,
        best: best.segments,
    })
}

/// Accuracy on noisy copies of the `test` rows, one row per level. Level `i`
/// draws its noise from `derive_seed(seed, i)`.
pub fn noise_sweep(
    net: &mut Network,
    ds: &LabeledDataset,
    test: &[usize],
    levels: &[f64],
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if test.is_empty() {
        return Err(invalid!("cannot evaluate on an empty index set"));
    }
    let clean = ds.subset(test)?;
    let all: Vec<usize> = (0..clean.len()).collect();
    levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let noisy = add_noise(&clean, level, derive_seed(seed, i as u64))?;
            Ok((level, evaluate(net, &noisy, &all)?.accuracy))
        })
        .collect()
}
