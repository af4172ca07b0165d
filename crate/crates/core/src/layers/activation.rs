use alloc::vec::Vec;

use super::{missing_forward, Layer, Mode};
use crate::error::{shape_err, Result};
use crate::tensor::Tensor;

/// Elementwise `max(0, x)`; the subgradient at exactly zero is zero.
#[derive(Debug, Clone, Default)]
pub struct Relu {
    active: Option<(Vec<usize>, Vec<bool>)>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for Relu {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        let active: Vec<bool> = x.data().iter().map(|v| *v > 0.0).collect();
        let out = x
            .data()
            .iter()
            .map(|v| if *v > 0.0 { *v } else { 0.0 })
            .collect();
        self.active = Some((x.shape().to_vec(), active));
        Tensor::from_vec(x.shape(), out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let (shape, active) = self.active.take().ok_or_else(|| missing_forward("relu"))?;
        if grad_out.shape() != shape.as_slice() {
            return Err(shape_err!(
                "relu backward expects {:?}, got {:?}",
                shape,
                grad_out.shape()
            ));
        }
        let g = grad_out
            .data()
            .iter()
            .zip(&active)
            .map(|(g, a)| if *a { *g } else { 0.0 })
            .collect();
        Tensor::from_vec(&shape, g)
    }
}

/// Mean over the time axis: `[B, C, T] -> [B, C]`.
#[derive(Debug, Clone, Default)]
pub struct GlobalAvgPool {
    input_shape: Option<[usize; 3]>,
}

impl GlobalAvgPool {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for GlobalAvgPool {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        let (b, c, t) = x.dims3()?;
        let out = x
            .data()
            .chunks_exact(t)
            .map(|row| row.iter().sum::<f64>() / t as f64)
            .collect();
        self.input_shape = Some([b, c, t]);
        Tensor::from_vec(&[b, c], out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let [b, c, t] = self
            .input_shape
            .take()
            .ok_or_else(|| missing_forward("gap"))?;
        if grad_out.shape() != [b, c] {
            return Err(shape_err!(
                "pool backward expects [{b}, {c}], got {:?}",
                grad_out.shape()
            ));
        }
        let mut g = Tensor::zeros(&[b, c, t]);
        for (row, gv) in g.data_mut().chunks_exact_mut(t).zip(grad_out.data()) {
            row.iter_mut().for_each(|v| *v = gv / t as f64);
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn relu_clamps_and_kills_gradient_at_zero() {
        let mut r = Relu::new();
        let y = r
            .forward(&Tensor::vector(vec![-1.0, 0.0, 2.0]), Mode::Train)
            .unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
        let g = r.backward(&Tensor::vector(vec![5.0, 5.0, 5.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn pool_of_constant_channel() {
        let mut p = GlobalAvgPool::new();
        let y = p
            .forward(&Tensor::full(&[2, 3, 7], 1.25), Mode::Train)
            .unwrap();
        assert_eq!(y.shape(), &[2, 3]);
        assert!(y.data().iter().all(|v| (*v - 1.25).abs() < 1e-15));
        let g = p.backward(&Tensor::full(&[2, 3], 7.0)).unwrap();
        assert!(g.data().iter().all(|v| (*v - 1.0).abs() < 1e-15));
    }
}
