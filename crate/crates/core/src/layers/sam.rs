use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{missing_forward, Layer, Mode, ParamKind, Parameter};
use crate::error::{invalid, shape_err, Result};
use crate::tensor::Tensor;
use crate::transform::DctPlan;

/// Spectrum attention: `x ↦ Cᵀ · diag(mask) · C · x` with `C` the
/// orthonormal DCT-II basis. The mask starts at all ones (identity filter).
///
/// Accepts any tensor whose last axis equals the mask length; every row
/// along that axis is filtered independently.
#[derive(Debug, Clone)]
pub struct SamLayer {
    plan: DctPlan,
    mask: Parameter,
    /// Spectra `C · x` of each row from the last forward pass.
    spectra: Option<Vec<f64>>,
}

impl SamLayer {
    pub fn new(name: impl Into<String>, len: usize) -> Result<Self> {
        let plan = DctPlan::new(len)?;
        Ok(SamLayer {
            plan,
            mask: Parameter::new(name, ParamKind::Mask, Tensor::full(&[len], 1.0)),
            spectra: None,
        })
    }

    pub fn len(&self) -> usize {
        self.plan.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plan.is_empty()
    }

    pub fn mask(&self) -> &Parameter {
        &self.mask
    }

    pub fn mask_mut(&mut self) -> &mut Parameter {
        &mut self.mask
    }

    fn check_len(&self, x: &Tensor) -> Result<()> {
        if x.last_dim() != self.len() {
            return Err(shape_err!(
                "SAM layer of length {} got input with shape {:?}",
                self.len(),
                x.shape()
            ));
        }
        Ok(())
    }

    /// Filters rows of `x` (concatenated, each of mask length) into `out`,
    /// appending their spectra to `spectra`.
    fn filter_rows(&self, x: &[f64], out: &mut [f64], spectra: &mut Vec<f64>) {
        let t = self.len();
        let mask = self.mask.value().data();
        let mut sp = vec![0.0; t];
        for (src, dst) in x.chunks_exact(t).zip(out.chunks_exact_mut(t)) {
            self.plan.forward_into(src, &mut sp);
            spectra.extend_from_slice(&sp);
            sp.iter_mut().zip(mask).for_each(|(s, m)| *s *= m);
            self.plan.inverse_into(&sp, dst);
        }
    }

    /// Backward over rows; `spectra` are the cached forward spectra.
    /// Skips the input gradient when `grad_in` is `None`.
    fn backprop_rows(
        &mut self,
        grad_out: &[f64],
        spectra: &[f64],
        mut grad_in: Option<&mut [f64]>,
    ) {
        let t = self.len();
        let mut gs = vec![0.0; t];
        let (mask, mask_grad) = self.mask.value_and_grad_mut();
        for (row, (g, sp)) in grad_out
            .chunks_exact(t)
            .zip(spectra.chunks_exact(t))
            .enumerate()
        {
            self.plan.forward_into(g, &mut gs);
            for k in 0..t {
                mask_grad[k] += sp[k] * gs[k];
                gs[k] *= mask[k];
            }
            if let Some(gi) = grad_in.as_deref_mut() {
                self.plan.inverse_into(&gs, &mut gi[row * t..(row + 1) * t]);
            }
        }
    }
}

impl Layer for SamLayer {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        self.check_len(x)?;
        let mut out = Tensor::zeros(x.shape());
        let mut spectra = Vec::with_capacity(x.len());
        self.filter_rows(x.data(), out.data_mut(), &mut spectra);
        self.spectra = Some(spectra);
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        self.check_len(grad_out)?;
        let spectra = self.spectra.take().ok_or_else(|| missing_forward("sam"))?;
        if spectra.len() != grad_out.len() {
            return Err(shape_err!(
                "SAM backward got {} values, forward cached {}",
                grad_out.len(),
                spectra.len()
            ));
        }
        let mut grad_in = Tensor::zeros(grad_out.shape());
        self.backprop_rows(grad_out.data(), &spectra, Some(grad_in.data_mut()));
        Ok(grad_in)
    }

    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.mask]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.mask]
    }
}

/// Segmented spectrum attention: the series is cut into `k` tumbling windows
/// of `input_len / k` samples, each filtered by its own [`SamLayer`], and the
/// filtered windows become `k` channels.
///
/// Input `[B, 1, n]` maps to `[B, k, n / k]` (a bare series `[n]` maps to
/// `[k, n / k]`). This is the channel-first layout of a `[T, K]` feature
/// matrix. The trailing `n mod k` samples are dropped and receive zero
/// gradient.
#[derive(Debug, Clone)]
pub struct SsamLayer {
    input_len: usize,
    seg_len: usize,
    segments: Vec<SamLayer>,
    /// Batch size seen by the last forward, `None` when no forward is pending.
    batch: Option<(usize, bool)>,
}

impl SsamLayer {
    /// Masks are named `{prefix}.{i}` for segment `i` (0-based).
    pub fn new(prefix: &str, input_len: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid!("segment count must be at least 1"));
        }
        let seg_len = input_len / k;
        if seg_len < 2 {
            return Err(invalid!(
                "segment count {k} leaves segments shorter than 2 samples for length {input_len}"
            ));
        }
        let segments = (0..k)
            .map(|i| SamLayer::new(format!("{prefix}.{i}"), seg_len))
            .collect::<Result<Vec<_>>>()?;
        Ok(SsamLayer {
            input_len,
            seg_len,
            segments,
            batch: None,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segment_len(&self) -> usize {
        self.seg_len
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn segments(&self) -> &[SamLayer] {
        &self.segments
    }

    pub fn segments_mut(&mut self) -> &mut [SamLayer] {
        &mut self.segments
    }

    fn batch_of(&self, x: &Tensor) -> Result<(usize, bool)> {
        match *x.shape() {
            [n] if n == self.input_len => Ok((1, true)),
            [b, 1, n] if n == self.input_len => Ok((b, false)),
            _ => Err(shape_err!(
                "SSAM layer expects [B, 1, {}] or [{}], got {:?}",
                self.input_len,
                self.input_len,
                x.shape()
            )),
        }
    }

    fn backprop(&mut self, grad_out: &Tensor, want_input: bool) -> Result<Option<Tensor>> {
        let (batch, bare) = self.batch.take().ok_or_else(|| missing_forward("ssam"))?;
        let expected = self.output_shape(batch, bare);
        if grad_out.shape() != expected.shape() {
            return Err(shape_err!(
                "SSAM backward expects {:?}, got {:?}",
                expected.shape(),
                grad_out.shape()
            ));
        }
        let (n, t, k) = (self.input_len, self.seg_len, self.segments.len());
        let mut grad_in = if bare {
            Tensor::zeros(&[n])
        } else {
            Tensor::zeros(&[batch, 1, n])
        };
        let mut seg_grad = vec![0.0; batch * t];
        let mut seg_in_grad = vec![0.0; batch * t];
        for (i, seg) in self.segments.iter_mut().enumerate() {
            let spectra = seg
                .spectra
                .take()
                .ok_or_else(|| missing_forward("ssam segment"))?;
            for b in 0..batch {
                let src = (b * k + i) * t;
                seg_grad[b * t..(b + 1) * t].copy_from_slice(&grad_out.data()[src..src + t]);
            }
            if !want_input {
                seg.backprop_rows(&seg_grad, &spectra, None);
                continue;
            }
            seg.backprop_rows(&seg_grad, &spectra, Some(&mut seg_in_grad));
            for b in 0..batch {
                let dst = b * n + i * t;
                grad_in.data_mut()[dst..dst + t].copy_from_slice(&seg_in_grad[b * t..(b + 1) * t]);
            }
        }
        Ok(want_input.then_some(grad_in))
    }

    fn output_shape(&self, batch: usize, bare: bool) -> Tensor {
        let k = self.segments.len();
        if bare {
            Tensor::zeros(&[k, self.seg_len])
        } else {
            Tensor::zeros(&[batch, k, self.seg_len])
        }
    }
}

impl Layer for SsamLayer {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        let (batch, bare) = self.batch_of(x)?;
        let (n, t, k) = (self.input_len, self.seg_len, self.segments.len());
        let mut out = self.output_shape(batch, bare);
        let mut seg_in = vec![0.0; batch * t];
        let mut seg_out = vec![0.0; batch * t];
        for (i, seg) in self.segments.iter_mut().enumerate() {
            for b in 0..batch {
                let start = b * n + i * t;
                seg_in[b * t..(b + 1) * t].copy_from_slice(&x.data()[start..start + t]);
            }
            let mut spectra = Vec::with_capacity(batch * t);
            seg.filter_rows(&seg_in, &mut seg_out, &mut spectra);
            seg.spectra = Some(spectra);
            for b in 0..batch {
                let dst = (b * k + i) * t;
                out.data_mut()[dst..dst + t].copy_from_slice(&seg_out[b * t..(b + 1) * t]);
            }
        }
        self.batch = Some((batch, bare));
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
        self.segments.iter().map(|s| &s.mask).collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.segments.iter_mut().map(|s| &mut s.mask).collect()
    }
}
