use ssam_core::data::{gen_synthetic, split, FreqPreset, LabeledDataset, SplitSpec, SyntheticSpec};
use ssam_core::model::{ModelConfig, Network};
use ssam_core::training::{candidate_seed, evaluate, noise_sweep, search_k, train, TrainConfig};

fn tiny(n: usize, classes: usize, k: usize) -> ModelConfig {
    ModelConfig {
        kernel_sizes: [3, 3],
        channels: [3, 2],
        ..ModelConfig::new(n, classes, k)
    }
}

/// Two linearly separable classes: a positive or negative ramp plus jitter.
fn ramps(per_class: usize) -> LabeledDataset {
    let n = 12;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2 {
        let sign = if class == 0 { 1.0 } else { -1.0 };
        for j in 0..per_class {
            let jitter = 0.05 * ((j * 7 % 11) as f64 - 5.0) / 5.0;
            values.extend((0..n).map(|t| sign * (t as f64 / n as f64 - 0.5) + jitter));
            labels.push(class);
        }
    }
    LabeledDataset::new("ramps", values, n, labels, 2).unwrap()
}

fn small_synthetic(per_class: usize) -> LabeledDataset {
    let spec = SyntheticSpec {
        n_per_class: per_class,
        ..SyntheticSpec::default().with_preset(FreqPreset::WellPosed)
    };
    gen_synthetic(&spec, 3).unwrap()
}

fn quick(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn zero_epochs_rejected() {
    assert!(quick(0).validate().is_err());
    let bad_range = TrainConfig {
        k_min: 4,
        k_max: 3,
        ..quick(1)
    };
    assert!(bad_range.validate().is_err());
    assert!(TrainConfig {
        lr: 0.0,
        ..quick(1)
    }
    .validate()
    .is_err());
}

#[test]
fn one_epoch_step_count() {
    let ds = small_synthetic(150);
    let sp = split(&ds, 1);
    assert_eq!(sp.train.len(), 270);
    let mut net = Network::new(&tiny(100, 3, 1), 1).unwrap();
    let h = train(&mut net, &ds, &sp, &quick(1)).unwrap();
    assert_eq!(h.records.len(), 1);
    assert_eq!(h.sgd_steps, 270usize.div_ceil(128));
}

#[test]
fn separable_toy_is_fit_exactly() {
    let ds = ramps(20);
    let sp = split(&ds, 2);
    let mut net = Network::new(&tiny(12, 2, 2), 2).unwrap();
    let cfg = TrainConfig {
        lr: 0.05,
        batch_size: 8,
        ..quick(50)
    };
    let h = train(&mut net, &ds, &sp, &cfg).unwrap();
    assert_eq!(h.records.last().unwrap().train_acc, 1.0);
}

#[test]
fn restored_checkpoint_is_the_best_epoch() {
    let ds = small_synthetic(60);
    let sp = split(&ds, 4);
    let mut net = Network::new(&tiny(100, 3, 2), 4).unwrap();
    let h = train(&mut net, &ds, &sp, &quick(8)).unwrap();
    let best = h.best().val_loss;
    assert!(h.records.iter().all(|r| best <= r.val_loss));
    assert_eq!(h.records[h.best_epoch - 1].epoch, h.best_epoch);
    let e = evaluate(&mut net, &ds, &sp.val).unwrap();
    assert!((e.loss - best).abs() < 1e-9, "{} vs {best}", e.loss);
    assert_eq!(net.snapshot(), h.best_checkpoint);
}

#[test]
fn training_is_deterministic() {
    let ds = small_synthetic(40);
    let sp = split(&ds, 6);
    let run = || {
        let mut net = Network::new(&tiny(100, 3, 1), 6).unwrap();
        train(&mut net, &ds, &sp, &quick(3)).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn memorizes_a_tiny_training_set() {
    let ds = small_synthetic(4);
    let all: Vec<usize> = (0..ds.len()).collect();
    let sp = SplitSpec {
        train: all.clone(),
        val: all.clone(),
        test: all,
        seed: 0,
    };
    let mut net = Network::new(&ModelConfig::new(100, 3, 1), 8).unwrap();
    let cfg = TrainConfig {
        lr: 0.1,
        batch_size: 12,
        ..quick(200)
    };
    let h = train(&mut net, &ds, &sp, &cfg).unwrap();
    assert_eq!(h.best().val_acc, 1.0);
}

#[test]
fn k_search_is_deterministic_and_respects_range() {
    let ds = small_synthetic(30);
    let sp = split(&ds, 9);
    let cfg = TrainConfig {
        k_min: 1,
        k_max: 3,
        search_epochs: 2,
        ..quick(1)
    };
    let a = search_k(&ds, &sp, &tiny(100, 3, 1), &cfg).unwrap();
    let b = search_k(&ds, &sp, &tiny(100, 3, 1), &cfg).unwrap();
    assert_eq!(a, b);
    let ks: Vec<usize> = a.candidates.iter().map(|c| c.segments).collect();
    assert_eq!(ks, [1, 2, 3]);
    let min = a
        .candidates
        .iter()
        .map(|c| c.val_loss)
        .fold(f64::INFINITY, f64::min);
    let first_min = a.candidates.iter().find(|c| c.val_loss == min).unwrap();
    assert_eq!(a.best, first_min.segments);

    let only_one = TrainConfig { k_max: 1, ..cfg };
    assert_eq!(
        search_k(&ds, &sp, &tiny(100, 3, 1), &only_one)
            .unwrap()
            .best,
        1
    );
}

#[test]
fn k_search_skips_degenerate_counts() {
    let ds = ramps(5);
    let sp = split(&ds, 1);
    let cfg = TrainConfig {
        k_min: 5,
        k_max: 8,
        search_epochs: 1,
        ..quick(1)
    };
    let s = search_k(&ds, &sp, &tiny(12, 2, 1), &cfg).unwrap();
    let ks: Vec<usize> = s.candidates.iter().map(|c| c.segments).collect();
    assert_eq!(ks, [5, 6]);
    let none = TrainConfig { k_min: 7, ..cfg };
    assert!(search_k(&ds, &sp, &tiny(12, 2, 1), &none).is_err());
}

#[test]
fn candidate_seeds_differ() {
    let seeds: Vec<u64> = (1..=10).map(|k| candidate_seed(0, k)).collect();
    for (i, a) in seeds.iter().enumerate() {
        assert!(seeds[i + 1..].iter().all(|b| a != b));
    }
    let a = Network::new(&tiny(100, 3, 1), candidate_seed(0, 1)).unwrap();
    let b = Network::new(&tiny(100, 3, 1), candidate_seed(0, 2)).unwrap();
    assert_ne!(a.snapshot(), b.snapshot());
}

#[test]
fn clean_sweep_level_matches_evaluate() {
    let ds = small_synthetic(20);
    let sp = split(&ds, 2);
    let mut net = Network::new(&tiny(100, 3, 1), 2).unwrap();
    train(&mut net, &ds, &sp, &quick(2)).unwrap();
    let sweep = noise_sweep(&mut net, &ds, &sp.test, &[0.0, 1.0], 3).unwrap();
    let e = evaluate(&mut net, &ds, &sp.test).unwrap();
    assert_eq!(sweep[0], (0.0, e.accuracy));
    assert_eq!(sweep.len(), 2);
}

#[test]
fn empty_partitions_are_rejected() {
    let ds = small_synthetic(5);
    let mut net = Network::new(&tiny(100, 3, 1), 2).unwrap();
    assert!(evaluate(&mut net, &ds, &[]).is_err());
    assert!(noise_sweep(&mut net, &ds, &[], &[0.0], 1).is_err());
    let sp = SplitSpec {
        train: vec![0, 1],
        val: vec![],
        test: vec![2],
        seed: 0,
    };
    assert!(train(&mut net, &ds, &sp, &quick(1)).is_err());
}

#[test]
fn model_and_data_must_agree() {
    let ds = small_synthetic(5);
    let sp = split(&ds, 1);
    let mut net = Network::new(&tiny(50, 3, 1), 2).unwrap();
    assert!(train(&mut net, &ds, &sp, &quick(1)).is_err());
}
