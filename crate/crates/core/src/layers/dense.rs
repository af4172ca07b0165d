use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{glorot_uniform, missing_forward, Layer, Mode, ParamKind, Parameter};
use crate::error::{shape_err, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Affine map `[B, in] -> [B, out]`, weight stored `[out, in]`.
#[derive(Debug, Clone)]
pub struct Dense {
    weight: Parameter,
    bias: Parameter,
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(name: &str, inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let weight = glorot_uniform(&[outputs, inputs], inputs, outputs, rng);
        Dense {
            weight: Parameter::new(format!("{name}.weight"), ParamKind::Weight, weight),
            bias: Parameter::new(
                format!("{name}.bias"),
                ParamKind::Bias,
                Tensor::zeros(&[outputs]),
            ),
            input: None,
        }
    }

    /// `(outputs, inputs)`.
    pub fn dims(&self) -> (usize, usize) {
        let s = self.weight.value().shape();
        (s[0], s[1])
    }
}

impl Layer for Dense {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        let (b, n_in) = x.dims2()?;
        let (n_out, w_in) = self.dims();
        if n_in != w_in {
            return Err(shape_err!("dense layer expects {w_in} inputs, got {n_in}"));
        }
        let w = self.weight.value().data();
        let bias = self.bias.value().data();
        let mut out = Vec::with_capacity(b * n_out);
        for row in x.data().chunks_exact(n_in) {
            for (o, wrow) in w.chunks_exact(n_in).enumerate() {
                out.push(bias[o] + wrow.iter().zip(row).map(|(a, b)| a * b).sum::<f64>());
            }
        }
        self.input = Some(x.clone());
        Tensor::from_vec(&[b, n_out], out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let x = self.input.take().ok_or_else(|| missing_forward("dense"))?;
        let (b, n_in) = x.dims2()?;
        let (n_out, _) = self.dims();
        if grad_out.shape() != [b, n_out] {
            return Err(shape_err!(
                "dense backward expects [{b}, {n_out}], got {:?}",
                grad_out.shape()
            ));
        }
        let w = self.weight.value().data().to_vec();
        let mut grad_x = vec![0.0; b * n_in];
        {
            let wg = self.weight.grad_mut();
            for ((xr, gr), gx) in x
                .data()
                .chunks_exact(n_in)
                .zip(grad_out.data().chunks_exact(n_out))
                .zip(grad_x.chunks_exact_mut(n_in))
            {
                for (o, &g) in gr.iter().enumerate() {
                    let wrow = &w[o * n_in..(o + 1) * n_in];
                    let wgrow = &mut wg[o * n_in..(o + 1) * n_in];
                    for i in 0..n_in {
                        wgrow[i] += g * xr[i];
                        gx[i] += g * wrow[i];
                    }
                }
            }
        }
        let bg = self.bias.grad_mut();
        for gr in grad_out.data().chunks_exact(n_out) {
            bg.iter_mut().zip(gr).for_each(|(a, g)| *a += g);
        }
        Tensor::from_vec(&[b, n_in], grad_x)
    }

    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.weight, &self.bias]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.weight, &mut self.bias]
    }
}
