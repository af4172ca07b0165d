//! Central finite-difference verification of the analytic gradients.
//!
//! [`standard_checks`] exercises every layer and a small end-to-end network
//! on randomized shapes; the test suites run it over many seeds.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::layers::{
    softmax_cross_entropy, BatchNorm1d, Conv1d, Dense, GlobalAvgPool, Layer, Mode, Relu, SamLayer,
    SsamLayer,
};
use crate::math;
use crate::model::{ModelConfig, Network};
use crate::rng::{self, Rng};
use crate::tensor::Tensor;

pub const H: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-5;
/// Batch statistics couple every input of a channel; their check is looser.
pub const BN_TOLERANCE: f64 = 1e-4;

/// Gradient norms below this are treated as zero. Finite differences cannot
/// resolve much less at `h = 1e-5` once batch statistics are involved, and
/// a conv bias feeding batch norm has an exactly-zero true gradient.
pub const NORM_FLOOR: f64 = 1e-4;

fn norm(x: &[f64]) -> f64 {
    math::sqrt(x.iter().map(|v| v * v).sum())
}

/// `‖a − n‖₂ / max(‖a‖₂, ‖n‖₂, NORM_FLOOR)`.
pub fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(NORM_FLOOR)
}

/// Uniform values in [-1, 1] kept at least `gap` away from zero, so ReLU
/// kinks are never straddled by a finite-difference step.
pub fn random_tensor(shape: &[usize], gap: f64, rng: &mut Rng) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| loop {
            let v: f64 = rng.random_range(-1.0..1.0);
            if v.abs() >= gap {
                break v;
            }
        })
        .collect();
    Tensor::from_vec(shape, data).expect("shape and data agree")
}

/// Central difference of `f` with respect to every entry of `values`.
fn numeric_grad<S>(
    state: &mut S,
    len: usize,
    get: impl Fn(&S, usize) -> f64,
    set: impl Fn(&mut S, usize, f64),
    f: impl Fn(&mut S) -> f64,
) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let orig = get(state, i);
            set(state, i, orig + H);
            let plus = f(state);
            set(state, i, orig - H);
            let minus = f(state);
            set(state, i, orig);
            (plus - minus) / (2.0 * H)
        })
        .collect()
}

fn weighted_output<L: Layer>(layer: &mut L, x: &Tensor, mode: Mode, w: &Tensor) -> f64 {
    let y = layer.forward(x, mode).expect("forward succeeds");
    y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

/// Relative error of the input gradient and of every parameter gradient of
/// `layer` for the objective `Σ w ⊙ layer(x)` with random `w`.
pub fn layer_errors<L: Layer>(
    layer: &mut L,
    x: &Tensor,
    mode: Mode,
    rng: &mut Rng,
) -> Vec<(String, f64)> {
    let out_shape = layer
        .forward(x, mode)
        .expect("forward succeeds")
        .shape()
        .to_vec();
    let w = random_tensor(&out_shape, 0.0, rng);
    layer.zero_grad();
    layer.forward(x, mode).expect("forward succeeds");
    let gx = layer.backward(&w).expect("backward succeeds");
    let analytic: Vec<Vec<f64>> = layer
        .parameters()
        .iter()
        .map(|p| p.grad().data().to_vec())
        .collect();

    let mut report = Vec::new();
    let mut state = (x.clone(), &mut *layer);
    let numeric = numeric_grad(
        &mut state,
        x.len(),
        |s, i| s.0.data()[i],
        |s, i, v| s.0.data_mut()[i] = v,
        |s| weighted_output(s.1, &s.0, mode, &w),
    );
    report.push(("input".to_string(), rel_error(gx.data(), &numeric)));
    for (pi, grads) in analytic.iter().enumerate() {
        let numeric = numeric_grad(
            layer,
            grads.len(),
            |l, i| l.parameters()[pi].value().data()[i],
            |l, i, v| l.parameters_mut()[pi].value_mut()[i] = v,
            |l| weighted_output(l, x, mode, &w),
        );
        report.push((
            layer.parameters()[pi].name().to_string(),
            rel_error(grads, &numeric),
        ));
    }
    report
}

/// Relative error of the softmax cross-entropy logit gradient.
pub fn softmax_error(rng: &mut Rng) -> f64 {
    let logits = random_tensor(&[4, 3], 0.0, rng);
    let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
    let (_, grad) = softmax_cross_entropy(&logits, &labels).expect("valid labels");
    let mut l = logits.clone();
    let numeric = numeric_grad(
        &mut l,
        logits.len(),
        |l, i| l.data()[i],
        |l, i, v| l.data_mut()[i] = v,
        |l| softmax_cross_entropy(l, &labels).expect("valid labels").0,
    );
    rel_error(grad.data(), &numeric)
}

/// Length 12, two segments, kernels 3/3, channels 3/2, two classes.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        input_length: 12,
        num_classes: 2,
        segments: 2,
        kernel_sizes: [3, 3],
        channels: [3, 2],
        with_ssam: true,
    }
}

/// Relative error of every parameter gradient of the tiny network under the
/// mean cross-entropy loss of a batch of three.
pub fn network_errors(seed: u64, rng: &mut Rng) -> Vec<(String, f64)> {
    let mut net = Network::new(&tiny_config(), seed).expect("valid config");
    if let Some(ssam) = net.ssam_mut() {
        for seg in ssam.segments_mut() {
            for m in seg.mask_mut().value_mut() {
                *m = rng.random_range(0.5..1.5);
            }
        }
    }
    let x = random_tensor(&[3, 1, 12], 0.0, rng);
    let labels: Vec<usize> = (0..3).map(|i| i % 2).collect();
    net.zero_grad();
    net.forward(&x, Mode::Train).expect("forward succeeds");
    net.backward(&labels).expect("backward succeeds");
    let analytic: Vec<Vec<f64>> = net
        .parameters()
        .iter()
        .map(|p| p.grad().data().to_vec())
        .collect();
    let loss = |net: &mut Network| {
        let logits = net.forward(&x, Mode::Train).expect("forward succeeds");
        softmax_cross_entropy(&logits, &labels)
            .expect("valid labels")
            .0
    };
    let mut report = Vec::new();
    for (pi, grads) in analytic.iter().enumerate() {
        let numeric = numeric_grad(
            &mut net,
            grads.len(),
            |n, i| n.parameters()[pi].value().data()[i],
            |n, i, v| n.parameters_mut()[pi].value_mut()[i] = v,
            loss,
        );
        report.push((
            net.parameters()[pi].name().to_string(),
            rel_error(grads, &numeric),
        ));
    }
    report
}

/// One named check: per-tensor relative errors and the tolerance they must
/// stay below.
#[derive(Debug, Clone)]
pub struct Check {
    pub what: &'static str,
    pub errors: Vec<(String, f64)>,
    pub tolerance: f64,
}

impl Check {
    pub fn worst(&self) -> (&str, f64) {
        self.errors
            .iter()
            .map(|(n, e)| (n.as_str(), *e))
            .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a })
    }

    pub fn passed(&self) -> bool {
        self.errors.iter().all(|(_, e)| *e < self.tolerance)
    }

    /// `what: worst tensor (error)` for failure messages.
    pub fn describe(&self) -> String {
        let (name, err) = self.worst();
        format!(
            "{}: {name} relative error {err:e} (tolerance {:e})",
            self.what, self.tolerance
        )
    }
}

fn random_masks(layer: &mut SamLayer, lo: f64, hi: f64, rng: &mut Rng) {
    for m in layer.mask_mut().value_mut() {
        *m = rng.random_range(lo..hi);
    }
}

/// Every layer on small random shapes plus the tiny network, for one seed.
pub fn standard_checks(seed: u64) -> Vec<Check> {
    let mut r = rng::seeded(rng::derive_seed(seed, 0x67c4));
    let mut init = rng::seeded(seed);
    let check = |what, errors, tolerance| Check {
        what,
        errors,
        tolerance,
    };
    let mut out = Vec::new();

    let mut sam = SamLayer::new("mask", 16).expect("valid length");
    random_masks(&mut sam, -1.5, 1.5, &mut r);
    let x = random_tensor(&[16], 0.0, &mut r);
    out.push(check(
        "sam",
        layer_errors(&mut sam, &x, Mode::Train, &mut r),
        TOLERANCE,
    ));

    let mut sam = SamLayer::new("mask", 7).expect("valid length");
    random_masks(&mut sam, -1.0, 2.0, &mut r);
    let x = random_tensor(&[3, 2, 7], 0.0, &mut r);
    out.push(check(
        "sam batched",
        layer_errors(&mut sam, &x, Mode::Train, &mut r),
        TOLERANCE,
    ));

    let mut ssam = SsamLayer::new("mask", 20, 3).expect("valid segments");
    for seg in ssam.segments_mut() {
        random_masks(seg, -1.5, 1.5, &mut r);
    }
    let x = random_tensor(&[20], 0.0, &mut r);
    out.push(check(
        "ssam",
        layer_errors(&mut ssam, &x, Mode::Train, &mut r),
        TOLERANCE,
    ));
    let x = random_tensor(&[2, 1, 20], 0.0, &mut r);
    out.push(check(
        "ssam batched",
        layer_errors(&mut ssam, &x, Mode::Train, &mut r),
        TOLERANCE,
    ));

    let mut conv = Conv1d::new("conv", 3, 2, 5, &mut init).expect("valid conv");
    let x = random_tensor(&[2, 3, 9], 0.0, &mut r);
    out.push(check(
        "conv1d",
        layer_errors(&mut conv, &x, Mode::Train, &mut r),
        TOLERANCE,
    ));
    let mut conv = Conv1d::new("conv", 2, 3, 4, &mut init).expect("valid conv");
    let x = random_tensor(&[1, 2, 6], 0.0, &mut r);
    out.push(check(
        "conv1d even kernel",
        layer_errors(&mut conv, &x, Mode::Train, &mut r),
        TOLERANCE,
    ));

    let mut bn = BatchNorm1d::new("bn", 2);
    for g in bn.gamma_mut().value_mut() {
        *g = r.random_range(0.5..1.5);
    }
    for b in bn.beta_mut().value_mut() {
        *b = r.random_range(-0.5..0.5);
    }
    let x = random_tensor(&[3, 2, 5], 0.0, &mut r);
    out.push(check(
        "batchnorm train",
        layer_errors(&mut bn, &x, Mode::Train, &mut r),
        BN_TOLERANCE,
    ));
    let x = random_tensor(&[2, 2, 3], 0.0, &mut r);
    out.push(check(
        "batchnorm infer",
        layer_errors(&mut bn, &x, Mode::Infer, &mut r),
        TOLERANCE,
    ));

    let x = random_tensor(&[2, 3, 4], 1e-3, &mut r);
    out.push(check(
        "relu",
        layer_errors(&mut Relu::new(), &x, Mode::Train, &mut r),
        TOLERANCE,
    ));
    out.push(check(
        "gap",
        layer_errors(&mut GlobalAvgPool::new(), &x, Mode::Train, &mut r),
        TOLERANCE,
    ));
    let mut dense = Dense::new("dense", 4, 3, &mut init);
    let x = random_tensor(&[5, 4], 0.0, &mut r);
    out.push(check(
        "dense",
        layer_errors(&mut dense, &x, Mode::Train, &mut r),
        TOLERANCE,
    ));

    out.push(check(
        "softmax cross-entropy",
        vec![("logits".into(), softmax_error(&mut r))],
        TOLERANCE,
    ));
    out.push(check("network", network_errors(seed, &mut r), TOLERANCE));
    out
}
