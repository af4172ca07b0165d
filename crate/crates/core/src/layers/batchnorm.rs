use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{missing_forward, Buffer, Layer, Mode, ParamKind, Parameter};
use crate::error::{invalid, shape_err, Result};
use crate::math;
use crate::tensor::Tensor;

pub const BN_EPSILON: f64 = 1e-5;
/// Weight of the old running statistic in each update.
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-channel batch normalization over `(batch, time)` of a `[B, C, T]`
/// input.
///
/// Training mode normalizes with the biased batch variance and updates the
/// running statistics as `running = 0.9 · running + 0.1 · batch`; inference
/// mode uses the running statistics.
#[derive(Debug, Clone)]
pub struct BatchNorm1d {
    gamma: Parameter,
    beta: Parameter,
    running_mean: Buffer,
    running_var: Buffer,
    cache: Option<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    mode: Mode,
    shape: [usize; 3],
    x_hat: Vec<f64>,
    inv_std: Vec<f64>,
}

impl BatchNorm1d {
    pub fn new(name: &str, channels: usize) -> Self {
        BatchNorm1d {
            gamma: Parameter::new(
                format!("{name}.gamma"),
                ParamKind::Norm,
                Tensor::full(&[channels], 1.0),
            ),
            beta: Parameter::new(
                format!("{name}.beta"),
                ParamKind::Norm,
                Tensor::zeros(&[channels]),
            ),
            running_mean: Buffer {
                name: format!("{name}.running_mean"),
                value: Tensor::zeros(&[channels]),
            },
            running_var: Buffer {
                name: format!("{name}.running_var"),
                value: Tensor::full(&[channels], 1.0),
            },
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma_mut(&mut self) -> &mut Parameter {
        &mut self.gamma
    }

    pub fn beta_mut(&mut self) -> &mut Parameter {
        &mut self.beta
    }

    pub fn running_mean(&self) -> &[f64] {
        self.running_mean.value.data()
    }

    pub fn running_var(&self) -> &[f64] {
        self.running_var.value.data()
    }
}

impl Layer for BatchNorm1d {
    fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let (b, c, t) = x.dims3()?;
        if c != self.channels() {
            return Err(shape_err!(
                "batch norm expects {} channels, got {c}",
                self.channels()
            ));
        }
        let count = b * t;
        if mode == Mode::Train && count < 2 {
            return Err(invalid!(
                "batch norm in training mode needs at least 2 values per channel, got {count}"
            ));
        }
        let xd = x.data();
        let rows = |ch: usize| (0..b).map(move |bi| (bi * c + ch) * t);
        let mut inv_std = vec![0.0; c];
        let mut mean = vec![0.0; c];
        for ch in 0..c {
            let (m, var) = match mode {
                Mode::Train => {
                    let m = rows(ch)
                        .map(|o| xd[o..o + t].iter().sum::<f64>())
                        .sum::<f64>()
                        / count as f64;
                    let v = rows(ch)
                        .map(|o| xd[o..o + t].iter().map(|v| (v - m) * (v - m)).sum::<f64>())
                        .sum::<f64>()
                        / count as f64;
                    let rm = &mut self.running_mean.value.data_mut()[ch];
                    *rm = BN_MOMENTUM * *rm + (1.0 - BN_MOMENTUM) * m;
                    let rv = &mut self.running_var.value.data_mut()[ch];
                    *rv = BN_MOMENTUM * *rv + (1.0 - BN_MOMENTUM) * v;
                    (m, v)
                }
                Mode::Infer => (
                    self.running_mean.value.data()[ch],
                    self.running_var.value.data()[ch],
                ),
            };
            mean[ch] = m;
            inv_std[ch] = 1.0 / math::sqrt(var + BN_EPSILON);
        }
        let gamma = self.gamma.value().data();
        let beta = self.beta.value().data();
        let mut x_hat = vec![0.0; xd.len()];
        let mut out = Tensor::zeros(&[b, c, t]);
        let rows_in = xd.chunks_exact(t);
        let rows_out = out
            .data_mut()
            .chunks_exact_mut(t)
            .zip(x_hat.chunks_exact_mut(t));
        for (r, (src, (dst, hat))) in rows_in.zip(rows_out).enumerate() {
            let ch = r % c;
            let (m, s, g, be) = (mean[ch], inv_std[ch], gamma[ch], beta[ch]);
            for ((d, h), &v) in dst.iter_mut().zip(hat.iter_mut()).zip(src) {
                *h = (v - m) * s;
                *d = g * *h + be;
            }
        }
        self.cache = Some(Cache {
            mode,
            shape: [b, c, t],
            x_hat,
            inv_std,
        });
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| missing_forward("batchnorm"))?;
        let [b, c, t] = cache.shape;
        if grad_out.shape() != cache.shape {
            return Err(shape_err!(
                "batch norm backward expects {:?}, got {:?}",
                cache.shape,
                grad_out.shape()
            ));
        }
        let gd = grad_out.data();
        let count = (b * t) as f64;
        let gamma = self.gamma.value().data().to_vec();
        let mut sum_g = vec![0.0; c];
        let mut sum_gh = vec![0.0; c];
        for (r, (g, h)) in gd
            .chunks_exact(t)
            .zip(cache.x_hat.chunks_exact(t))
            .enumerate()
        {
            let ch = r % c;
            sum_g[ch] += g.iter().sum::<f64>();
            sum_gh[ch] += g.iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
        }
        for ch in 0..c {
            self.beta.grad_mut()[ch] += sum_g[ch];
            self.gamma.grad_mut()[ch] += sum_gh[ch];
        }
        let mut grad_x = vec![0.0; gd.len()];
        let rows = grad_x
            .chunks_exact_mut(t)
            .zip(gd.chunks_exact(t).zip(cache.x_hat.chunks_exact(t)));
        for (r, (dst, (g, h))) in rows.enumerate() {
            let ch = r % c;
            let scale = gamma[ch] * cache.inv_std[ch];
            match cache.mode {
                // Batch statistics depend on every input in the channel.
                Mode::Train => {
                    let (mg, mgh) = (sum_g[ch] / count, sum_gh[ch] / count);
                    for ((d, &gv), &hv) in dst.iter_mut().zip(g).zip(h) {
                        *d = scale * (gv - mg - hv * mgh);
                    }
                }
                Mode::Infer => {
                    for (d, &gv) in dst.iter_mut().zip(g) {
                        *d = scale * gv;
                    }
                }
            }
        }
        Tensor::from_vec(&cache.shape, grad_x)
    }

    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.gamma, &self.beta]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn buffers(&self) -> Vec<&Buffer> {
        vec![&self.running_mean, &self.running_var]
    }

    fn buffers_mut(&mut self) -> Vec<&mut Buffer> {
        vec![&mut self.running_mean, &mut self.running_var]
    }
}
