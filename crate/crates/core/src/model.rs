//! The SSAM-CNN classifier and its optimizer.
//!
//! Pipeline: `SSAM(K) -> [conv -> batchnorm -> relu] x 2 -> global average
//! pool -> dense -> softmax`. The base CNN used as an ablation is the same
//! network without the SSAM stage.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, shape_err, Error, Result};
use crate::layers::{
    softmax_cross_entropy, BatchNorm1d, Conv1d, Dense, GlobalAvgPool, Layer, Mode, ParamKind,
    Parameter, Relu, SsamLayer,
};
use crate::rng;
use crate::tensor::Tensor;

pub const DEFAULT_KERNEL_SIZES: [usize; 2] = [8, 5];
pub const DEFAULT_CHANNELS: [usize; 2] = [32, 8];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_length: usize,
    pub num_classes: usize,
    /// Number of SSAM segments (ignored when `with_ssam` is false).
    pub segments: usize,
    pub kernel_sizes: [usize; 2],
    pub channels: [usize; 2],
    pub with_ssam: bool,
}

impl ModelConfig {
    /// Kernels `{8, 5}`, channels `{32, 8}`.
    pub fn new(input_length: usize, num_classes: usize, segments: usize) -> Self {
        ModelConfig {
            input_length,
            num_classes,
            segments,
            kernel_sizes: DEFAULT_KERNEL_SIZES,
            channels: DEFAULT_CHANNELS,
            with_ssam: true,
        }
    }

    /// Same network with the SSAM stage removed.
    pub fn without_ssam(mut self) -> Self {
        self.with_ssam = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_length == 0 {
            return Err(invalid!("input length must be positive"));
        }
        if self.num_classes == 0 {
            return Err(invalid!("class count must be positive"));
        }
        if self.kernel_sizes.contains(&0) || self.channels.contains(&0) {
            return Err(invalid!(
                "kernel sizes {:?} and channels {:?} must be positive",
                self.kernel_sizes,
                self.channels
            ));
        }
        if self.segments == 0 {
            return Err(invalid!("segment count must be at least 1"));
        }
        if self.with_ssam && self.input_length / self.segments < 2 {
            return Err(invalid!(
                "{} segments leave fewer than 2 samples each for length {}",
                self.segments,
                self.input_length
            ));
        }
        Ok(())
    }

    /// `(channels, time)` entering the first convolution.
    pub fn conv_input(&self) -> (usize, usize) {
        if self.with_ssam {
            (self.segments, self.input_length / self.segments)
        } else {
            (1, self.input_length)
        }
    }
}

/// Convolution, batch normalization, ReLU.
#[derive(Debug, Clone)]
pub struct ConvBlock {
    pub conv: Conv1d,
    pub norm: BatchNorm1d,
    pub relu: Relu,
}

impl ConvBlock {
    fn new(
        name: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        rng: &mut rng::Rng,
    ) -> Result<Self> {
        Ok(ConvBlock {
            conv: Conv1d::new(&format!("{name}.conv"), c_in, c_out, kernel, rng)?,
            norm: BatchNorm1d::new(&format!("{name}.bn"), c_out),
            relu: Relu::new(),
        })
    }
}

/// Named tensor in a [`Snapshot`].
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub tensor: Tensor,
}

/// Copy of every parameter and buffer value of a network, in registry order.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub entries: Vec<NamedTensor>,
}

#[derive(Debug, Clone)]
pub struct Network {
    config: ModelConfig,
    ssam: Option<SsamLayer>,
    blocks: [ConvBlock; 2],
    pool: GlobalAvgPool,
    dense: Dense,
    /// Logits and reshape bookkeeping of the last forward.
    logits: Option<Tensor>,
}

impl Network {
    /// Builds the network with weights drawn from `seed`. Masks start at one,
    /// batch-norm scale/shift at one/zero, everything else Glorot-uniform.
    pub fn new(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::seeded(seed);
        let ssam = if config.with_ssam {
            Some(SsamLayer::new(
                "ssam.mask",
                config.input_length,
                config.segments,
            )?)
        } else {
            None
        };
        let (c_in, _) = config.conv_input();
        let [k1, k2] = config.kernel_sizes;
        let [c1, c2] = config.channels;
        let block1 = ConvBlock::new("block1", c_in, c1, k1, &mut rng)?;
        let block2 = ConvBlock::new("block2", c1, c2, k2, &mut rng)?;
        let dense = Dense::new("dense", c2, config.num_classes, &mut rng);
        Ok(Network {
            config: config.clone(),
            ssam,
            blocks: [block1, block2],
            pool: GlobalAvgPool::new(),
            dense,
            logits: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn ssam(&self) -> Option<&SsamLayer> {
        self.ssam.as_ref()
    }

    pub fn ssam_mut(&mut self) -> Option<&mut SsamLayer> {
        self.ssam.as_mut()
    }

    pub fn blocks(&self) -> &[ConvBlock; 2] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [ConvBlock; 2] {
        &mut self.blocks
    }

    /// Mask values per segment, empty for the base CNN.
    pub fn masks(&self) -> Vec<&[f64]> {
        self.ssam
            .iter()
            .flat_map(|s| s.segments().iter().map(|seg| seg.mask().value().data()))
            .collect()
    }

    fn layers(&self) -> Vec<&dyn Layer> {
        let mut out: Vec<&dyn Layer> = Vec::with_capacity(9);
        if let Some(s) = &self.ssam {
            out.push(s);
        }
        for b in &self.blocks {
            out.push(&b.conv);
            out.push(&b.norm);
            out.push(&b.relu);
        }
        out.push(&self.pool);
        out.push(&self.dense);
        out
    }

    fn layers_mut(&mut self) -> Vec<&mut dyn Layer> {
        let mut out: Vec<&mut dyn Layer> = Vec::with_capacity(9);
        if let Some(s) = &mut self.ssam {
            out.push(s);
        }
        for b in &mut self.blocks {
            out.push(&mut b.conv);
            out.push(&mut b.norm);
            out.push(&mut b.relu);
        }
        out.push(&mut self.pool);
        out.push(&mut self.dense);
        out
    }

    /// Trainable parameters in registry order.
    pub fn parameters(&self) -> Vec<&Parameter> {
        self.layers()
            .into_iter()
            .flat_map(|l| l.parameters())
            .collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.layers_mut()
            .into_iter()
            .flat_map(|l| l.parameters_mut())
            .collect()
    }

    /// Total number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    /// `[B, 1, n]` series to `[B, num_classes]` logits.
    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let (b, c, n) = x.dims3()?;
        if c != 1 || n != self.config.input_length {
            return Err(shape_err!(
                "network expects [B, 1, {}], got {:?}",
                self.config.input_length,
                x.shape()
            ));
        }
        if b == 0 {
            return Err(invalid!("empty batch"));
        }
        let mut h = x.clone();
        for layer in self.layers_mut() {
            h = layer.forward(&h, mode)?;
        }
        self.logits = Some(h.clone());
        Ok(h)
    }

    /// Mean cross-entropy of the last forward against `labels`, with
    /// gradients accumulated into every parameter.
    pub fn backward(&mut self, labels: &[usize]) -> Result<f64> {
        let logits = self
            .logits
            .take()
            .ok_or_else(|| Error::State("network backward called without a forward".into()))?;
        let (loss, mut grad) = softmax_cross_entropy(&logits, labels)?;
        let mut layers = self.layers_mut();
        let first = layers.remove(0);
        for layer in layers.into_iter().rev() {
            grad = layer.backward(&grad)?;
        }
        first.accumulate_grads(&grad)?;
        Ok(loss)
    }

    pub fn snapshot(&self) -> Snapshot {
        let mut entries = Vec::new();
        for layer in self.layers() {
            for p in layer.parameters() {
                entries.push(NamedTensor {
                    name: p.name().into(),
                    tensor: p.value().clone(),
                });
            }
            for b in layer.buffers() {
                entries.push(NamedTensor {
                    name: b.name.clone(),
                    tensor: b.value.clone(),
                });
            }
        }
        Snapshot { entries }
    }

    /// Loads values from a snapshot taken from a network of the same config.
    pub fn restore(&mut self, snapshot: &Snapshot) -> Result<()> {
        let lookup: BTreeMap<&str, &Tensor> = snapshot
            .entries
            .iter()
            .map(|e| (e.name.as_str(), &e.tensor))
            .collect();
        let expected = self.snapshot();
        if lookup.len() != snapshot.entries.len()
            || expected.entries.len() != snapshot.entries.len()
        {
            return Err(shape_err!(
                "snapshot has {} tensors, network has {}",
                snapshot.entries.len(),
                expected.entries.len()
            ));
        }
        for e in &expected.entries {
            match lookup.get(e.name.as_str()) {
                Some(t) if t.shape() == e.tensor.shape() => {}
                Some(t) => {
                    return Err(shape_err!(
                        "snapshot tensor {} has shape {:?}, network expects {:?}",
                        e.name,
                        t.shape(),
                        e.tensor.shape()
                    ))
                }
                None => return Err(shape_err!("snapshot is missing tensor {}", e.name)),
            }
        }
        for layer in self.layers_mut() {
            for p in layer.parameters_mut() {
                let src = lookup[p.name()];
                p.value_mut().copy_from_slice(src.data());
            }
            for b in layer.buffers_mut() {
                let src = lookup[b.name.as_str()];
                b.value.data_mut().copy_from_slice(src.data());
            }
        }
        Ok(())
    }
}

/// One SGD step: `p <- p - lr · grad` for every parameter, then the L1
/// subgradient step `m <- m - lr · l1_coeff · sign(m)` on mask parameters
/// only (`sign(0) = 0`). Gradients are zeroed afterwards.
///
/// Nothing is updated if any gradient is non-finite.
pub fn sgd_step(net: &mut Network, lr: f64, l1_coeff: f64) -> Result<()> {
    let mut params = net.parameters_mut();
    if let Some(p) = params.iter().find(|p| !p.grad().all_finite()) {
        return Err(Error::Divergence {
            epoch: None,
            what: format!("non-finite gradient in {}", p.name()),
        });
    }
    for p in params.iter_mut() {
        let is_mask = p.kind() == ParamKind::Mask;
        let (value, grad) = p.value_and_grad_mut();
        for (v, g) in value.iter_mut().zip(grad.iter_mut()) {
            let sign = if *v > 0.0 {
                1.0
            } else if *v < 0.0 {
                -1.0
            } else {
                0.0
            };
            *v -= lr * *g;
            if is_mask {
                *v -= lr * l1_coeff * sign;
            }
            *g = 0.0;
        }
    }
    Ok(())
}

/// L1 norm of every mask of the network, summed.
pub fn mask_l1(net: &Network) -> f64 {
    net.masks()
        .iter()
        .flat_map(|m| m.iter())
        .fold(0.0, |acc, v| acc + v.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig {
            input_length: 12,
            num_classes: 2,
            segments: 2,
            kernel_sizes: [3, 3],
            channels: [3, 2],
            with_ssam: true,
        }
    }

    #[test]
    fn parameter_count_by_construction() {
        let net = Network::new(&ModelConfig::new(100, 3, 1), 0).unwrap();
        let expected = 100 + (32 * 8 + 32) + 64 + (8 * 32 * 5 + 8) + 16 + (8 * 3 + 3);
        assert_eq!(net.parameter_count(), expected);
        let names: Vec<&str> = net.parameters().iter().map(|p| p.name()).collect();
        let mut unique = names.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), names.len());
    }

    #[test]
    fn ablation_feeds_raw_series_to_first_conv() {
        let net = Network::new(&ModelConfig::new(100, 3, 4).without_ssam(), 0).unwrap();
        assert!(net.ssam().is_none());
        assert_eq!(net.blocks()[0].conv.dims().1, 1);
        assert!(net.parameters()[0].name().starts_with("block1.conv"));
    }

    #[test]
    fn segments_become_conv_channels() {
        let mut net = Network::new(&ModelConfig::new(100, 3, 4), 0).unwrap();
        assert_eq!(net.blocks()[0].conv.dims().1, 4);
        assert_eq!(net.config().conv_input(), (4, 25));
        let y = net
            .forward(&Tensor::full(&[3, 1, 100], 0.5), Mode::Train)
            .unwrap();
        assert_eq!(y.shape(), &[3, 3]);
    }

    #[test]
    fn invalid_configs() {
        let mut c = ModelConfig::new(10, 2, 6);
        assert!(Network::new(&c, 0).is_err());
        c.with_ssam = false;
        assert!(Network::new(&c, 0).is_ok());
        assert!(Network::new(&ModelConfig::new(10, 0, 1), 0).is_err());
        assert!(Network::new(&ModelConfig::new(10, 2, 0), 0).is_err());
    }

    #[test]
    fn unit_mask_matches_base_cnn() {
        let with = Network::new(&ModelConfig::new(40, 3, 1), 9).unwrap();
        let without = Network::new(&ModelConfig::new(40, 3, 1).without_ssam(), 9).unwrap();
        let x: Vec<f64> = (0..80)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0)
            .collect();
        let x = Tensor::from_vec(&[2, 1, 40], x).unwrap();
        for mode in [Mode::Infer, Mode::Train] {
            let a = with.clone().forward(&x, mode).unwrap();
            let b = without.clone().forward(&x, mode).unwrap();
            for (p, q) in a.data().iter().zip(b.data()) {
                assert!((p - q).abs() < 1e-9, "{p} vs {q}");
            }
        }
    }

    #[test]
    fn single_instance_loss_is_its_nll() {
        let mut net = Network::new(&tiny(), 3).unwrap();
        let x =
            Tensor::from_vec(&[1, 1, 12], (0..12).map(|i| i as f64 / 6.0 - 1.0).collect()).unwrap();
        let logits = net.forward(&x, Mode::Infer).unwrap();
        let l = logits.data();
        let lse = (l[0].exp() + l[1].exp()).ln();
        let loss = net.backward(&[1]).unwrap();
        assert!((loss - (lse - l[1])).abs() < 1e-12);
    }

    #[test]
    fn sgd_arithmetic() {
        let mut net = Network::new(&tiny(), 1).unwrap();
        net.ssam_mut().unwrap().segments_mut()[0]
            .mask_mut()
            .value_mut()[1] = 0.0;
        let before = net.snapshot();
        sgd_step(&mut net, 0.01, 0.01).unwrap();
        let after = net.snapshot();
        for (b, a) in before.entries.iter().zip(&after.entries) {
            if b.name.starts_with("ssam") {
                for (x, y) in b.tensor.data().iter().zip(a.tensor.data()) {
                    let expected = if *x == 0.0 { 0.0 } else { 1.0 - 0.01 * 0.01 };
                    assert_eq!(*y, expected);
                }
            } else {
                assert_eq!(b, a);
            }
        }
        let w = {
            let p = &mut net.parameters_mut()[2];
            p.grad_mut()[0] = 0.5;
            p.value().data()[0]
        };
        sgd_step(&mut net, 0.01, 0.01).unwrap();
        assert_eq!(net.parameters()[2].value().data()[0], w - 0.01 * 0.5);
        assert!(net
            .parameters()
            .iter()
            .all(|p| p.grad().data().iter().all(|g| *g == 0.0)));
    }

    #[test]
    fn sgd_rejects_non_finite_gradients() {
        let mut net = Network::new(&tiny(), 1).unwrap();
        net.parameters_mut()[4].grad_mut()[0] = f64::NAN;
        let name = String::from(net.parameters()[4].name());
        let before = net.snapshot();
        match sgd_step(&mut net, 0.01, 0.01) {
            Err(Error::Divergence { what, .. }) => assert!(what.contains(&name)),
            other => panic!("{other:?}"),
        }
        assert_eq!(before, net.snapshot());
    }

    #[test]
    fn snapshot_round_trip() {
        let a = Network::new(&tiny(), 1).unwrap();
        let mut b = Network::new(&tiny(), 2).unwrap();
        assert_ne!(a.snapshot(), b.snapshot());
        b.restore(&a.snapshot()).unwrap();
        assert_eq!(a.snapshot(), b.snapshot());
        let mut other = Network::new(&ModelConfig::new(12, 2, 3), 0).unwrap();
        assert!(other.restore(&a.snapshot()).is_err());
    }

    #[test]
    fn backward_requires_forward() {
        let mut net = Network::new(&tiny(), 1).unwrap();
        assert!(matches!(net.backward(&[0]), Err(Error::State(_))));
    }

    #[test]
    fn zero_mask_grads_stay_finite() {
        let mut net = Network::new(&tiny(), 5).unwrap();
        let x = Tensor::from_vec(&[3, 1, 12], (0..36).map(|i| (i % 7) as f64).collect()).unwrap();
        net.forward(&x, Mode::Train).unwrap();
        net.backward(&[0, 1, 1]).unwrap();
        assert!(net.parameters().iter().all(|p| p.grad().all_finite()));
    }
}
