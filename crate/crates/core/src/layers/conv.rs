use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{glorot_uniform, missing_forward, Layer, Mode, ParamKind, Parameter};
use crate::error::{invalid, shape_err, Result};
use crate::rng::Rng;
use crate::tensor::{gemm, Strides, Tensor};

/// 1-D cross-correlation with zero "same" padding.
///
/// A kernel of width `k` is padded by `(k - 1) / 2` on the left and the
/// remainder on the right, so the output keeps the input's time length.
/// Weight layout is `[c_out, c_in, k]`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    weight: Parameter,
    bias: Parameter,
    input: Option<Tensor>,
}

/// Output positions `t` for which `t + j - pad_left` lies in `[0, len)`,
/// or `None` if tap `j` never touches the input.
#[inline]
fn valid_range(j: usize, pad_left: usize, len: usize) -> Option<(usize, usize)> {
    let lo = pad_left.saturating_sub(j);
    let hi = (len + pad_left).saturating_sub(j).min(len);
    (lo < hi).then_some((lo, hi))
}

/// Unfolds one `[c_in, t]` series into `cols: [c_in * k, t]`, where row
/// `ci * k + j`, column `s` holds `x[ci, s + j - pad]` (zero outside).
fn unfold_into(x: &[f64], c_in: usize, t: usize, k: usize, pad: usize, cols: &mut [f64]) {
    cols.iter_mut().for_each(|v| *v = 0.0);
    for ci in 0..c_in {
        let src = &x[ci * t..(ci + 1) * t];
        for j in 0..k {
            let Some((lo, hi)) = valid_range(j, pad, t) else {
                continue;
            };
            let shift = lo + j - pad;
            let row = &mut cols[(ci * k + j) * t..(ci * k + j + 1) * t];
            row[lo..hi].copy_from_slice(&src[shift..shift + hi - lo]);
        }
    }
}

/// Unfolds an upstream gradient `[c_out, t]` for the input-gradient pass:
/// row `co * k + j`, column `s` holds `g[co, s - j + pad]` (zero outside),
/// so `grad_x = W' · rows` with `W'[ci, co * k + j] = W[co, ci, j]`.
fn unfold_adjoint_into(g: &[f64], c_out: usize, t: usize, k: usize, pad: usize, rows: &mut [f64]) {
    rows.iter_mut().for_each(|v| *v = 0.0);
    for co in 0..c_out {
        let src = &g[co * t..(co + 1) * t];
        for j in 0..k {
            // Output position s reads g at s + pad - j.
            let lo = j.saturating_sub(pad);
            let hi = (t + j).saturating_sub(pad).min(t);
            if lo >= hi {
                continue;
            }
            let shift = lo + pad - j;
            let row = &mut rows[(co * k + j) * t..(co * k + j + 1) * t];
            row[lo..hi].copy_from_slice(&src[shift..shift + hi - lo]);
        }
    }
}

impl Conv1d {
    pub fn new(
        name: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if c_in == 0 || c_out == 0 || kernel == 0 {
            return Err(invalid!(
                "conv {name}: channels and kernel width must be positive (c_in={c_in}, c_out={c_out}, k={kernel})"
            ));
        }
        let weight = glorot_uniform(&[c_out, c_in, kernel], c_in * kernel, c_out * kernel, rng);
        Self::from_parts(name, weight, Tensor::zeros(&[c_out]))
    }

    pub fn from_parts(name: &str, weight: Tensor, bias: Tensor) -> Result<Self> {
        let (c_out, _, _) = weight.dims3()?;
        if bias.shape() != [c_out] {
            return Err(shape_err!(
                "conv {name}: bias shape {:?} does not match {c_out} output channels",
                bias.shape()
            ));
        }
        Ok(Conv1d {
            weight: Parameter::new(format!("{name}.weight"), ParamKind::Weight, weight),
            bias: Parameter::new(format!("{name}.bias"), ParamKind::Bias, bias),
            input: None,
        })
    }

    pub fn weight(&self) -> &Parameter {
        &self.weight
    }

    pub fn bias(&self) -> &Parameter {
        &self.bias
    }

    /// `(c_out, c_in, k)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        let s = self.weight.value().shape();
        (s[0], s[1], s[2])
    }

    fn pad_left(&self) -> usize {
        (self.dims().2 - 1) / 2
    }

    fn backprop(&mut self, grad_out: &Tensor, want_input: bool) -> Result<Option<Tensor>> {
        let x = self.input.take().ok_or_else(|| missing_forward("conv1d"))?;
        let (b, c_in, t) = x.dims3()?;
        let (c_out, _, k) = self.dims();
        if grad_out.shape() != [b, c_out, t] {
            return Err(shape_err!(
                "conv backward expects {:?}, got {:?}",
                [b, c_out, t],
                grad_out.shape()
            ));
        }
        let pad = self.pad_left();
        let ck = c_in * k;
        let mut cols = vec![0.0; ck * t];
        for (bg, co) in self.bias.grad_mut().iter_mut().zip(0..c_out) {
            *bg += (0..b)
                .map(|bi| {
                    grad_out.data()[(bi * c_out + co) * t..(bi * c_out + co + 1) * t]
                        .iter()
                        .sum::<f64>()
                })
                .sum::<f64>();
        }
        // W'[ci, co * k + j] = W[co, ci, j]
        let w = self.weight.value().data();
        let mut w_adj = vec![0.0; c_in * c_out * k];
        for co in 0..c_out {
            for ci in 0..c_in {
                for j in 0..k {
                    w_adj[ci * c_out * k + co * k + j] = w[(co * c_in + ci) * k + j];
                }
            }
        }
        let mut grad_x = want_input.then(|| vec![0.0; b * c_in * t]);
        let mut g_rows = vec![0.0; c_out * k * t];
        for bi in 0..b {
            let g = &grad_out.data()[bi * c_out * t..(bi + 1) * c_out * t];
            unfold_into(
                &x.data()[bi * c_in * t..(bi + 1) * c_in * t],
                c_in,
                t,
                k,
                pad,
                &mut cols,
            );
            // dW += G · colsᵀ
            gemm(
                c_out,
                t,
                ck,
                g,
                Strides::row_major(t),
                &cols,
                Strides::transposed(t),
                1.0,
                self.weight.grad_mut(),
                Strides::row_major(ck),
            );
            if let Some(gx) = grad_x.as_mut() {
                unfold_adjoint_into(g, c_out, t, k, pad, &mut g_rows);
                gemm(
                    c_in,
                    c_out * k,
                    t,
                    &w_adj,
                    Strides::row_major(c_out * k),
                    &g_rows,
                    Strides::row_major(t),
                    0.0,
                    &mut gx[bi * c_in * t..(bi + 1) * c_in * t],
                    Strides::row_major(t),
                );
            }
        }
        grad_x
            .map(|g| Tensor::from_vec(&[b, c_in, t], g))
            .transpose()
    }
}

impl Layer for Conv1d {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        let (b, c_in, t) = x.dims3()?;
        let (c_out, w_in, k) = self.dims();
        if c_in != w_in {
            return Err(shape_err!("conv expects {w_in} input channels, got {c_in}"));
        }
        let pad = self.pad_left();
        let ck = c_in * k;
        let mut cols = vec![0.0; ck * t];
        let mut out = Tensor::zeros(&[b, c_out, t]);
        let bias = self.bias.value().data();
        for bi in 0..b {
            unfold_into(
                &x.data()[bi * c_in * t..(bi + 1) * c_in * t],
                c_in,
                t,
                k,
                pad,
                &mut cols,
            );
            let dst = &mut out.data_mut()[bi * c_out * t..(bi + 1) * c_out * t];
            for (row, &bv) in dst.chunks_exact_mut(t).zip(bias) {
                row.iter_mut().for_each(|v| *v = bv);
            }
            gemm(
                c_out,
                ck,
                t,
                self.weight.value().data(),
                Strides::row_major(ck),
                &cols,
                Strides::row_major(t),
                1.0,
                dst,
                Strides::row_major(t),
            );
        }
        self.input = Some(x.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        Ok(self
            .backprop(grad_out, true)?
            .expect("input gradient requested"))
    }

    fn accumulate_grads(&mut self, grad_out: &Tensor) -> Result<()> {
        self.backprop(grad_out, false).map(drop)
    }

    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.weight, &self.bias]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.weight, &mut self.bias]
    }
}
