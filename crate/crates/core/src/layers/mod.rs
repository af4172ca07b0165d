//! Layers with explicit forward and backward passes.
//!
//! Every layer caches what its backward pass needs during `forward` and
//! consumes that cache in `backward`; gradients accumulate into
//! [`Parameter::grad`] until [`Parameter::zero_grad`] is called.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::Result;
use crate::math;
use crate::rng::Rng;
use crate::tensor::Tensor;

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod loss;
mod sam;

pub use activation::{GlobalAvgPool, Relu};
pub use batchnorm::{BatchNorm1d, BN_EPSILON, BN_MOMENTUM};
pub use conv::Conv1d;
pub use dense::Dense;
pub use loss::softmax_cross_entropy;
pub use sam::{SamLayer, SsamLayer};

/// Batch norm is the only layer whose behaviour depends on this.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// What a parameter is used for; the optimizer treats masks specially.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Spectral attention mask, subject to L1 shrinkage.
    Mask,
    Weight,
    Bias,
    /// Batch-norm scale or shift.
    Norm,
}

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    name: String,
    kind: ParamKind,
    value: Tensor,
    grad: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, kind: ParamKind, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter {
            name: name.into(),
            kind,
            value,
            grad,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    pub fn value(&self) -> &Tensor {
        &self.value
    }

    pub fn grad(&self) -> &Tensor {
        &self.grad
    }

    /// Mutable access to the value. The shape cannot change through this.
    pub fn value_mut(&mut self) -> &mut [f64] {
        self.value.data_mut()
    }

    pub fn grad_mut(&mut self) -> &mut [f64] {
        self.grad.data_mut()
    }

    /// Both buffers at once, for update rules.
    pub fn value_and_grad_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (self.value.data_mut(), self.grad.data_mut())
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Non-trainable layer state (batch-norm running statistics).
#[derive(Debug, Clone, PartialEq)]
pub struct Buffer {
    pub name: String,
    pub value: Tensor,
}

pub trait Layer: Send {
    fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor>;

    /// Gradient w.r.t. the input of the last `forward`; parameter gradients
    /// are accumulated as a side effect.
    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor>;

    /// Backward pass for a layer whose input gradient is not needed (the
    /// first layer of a network); only parameter gradients are accumulated.
    fn accumulate_grads(&mut self, grad_out: &Tensor) -> Result<()> {
        self.backward(grad_out).map(drop)
    }

    fn parameters(&self) -> Vec<&Parameter> {
        Vec::new()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        Vec::new()
    }

    fn buffers(&self) -> Vec<&Buffer> {
        Vec::new()
    }

    fn buffers_mut(&mut self) -> Vec<&mut Buffer> {
        Vec::new()
    }

    fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }
}

/// Glorot-uniform draw on ±sqrt(6 / (fan_in + fan_out)).
pub(crate) fn glorot_uniform(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut Rng,
) -> Tensor {
    let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.random_range(-limit..limit);
    }
    t
}

pub(crate) fn missing_forward(layer: &str) -> crate::Error {
    crate::Error::State(alloc::format!(
        "{layer}: backward called without a preceding forward"
    ))
}
