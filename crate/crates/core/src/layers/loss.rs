use crate::error::{invalid, shape_err, Result};
use crate::math;
use crate::tensor::Tensor;

/// Mean softmax cross-entropy over a `[B, C]` batch of logits.
///
/// Returns the loss and its exact gradient `(softmax - onehot) / B`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let (b, c) = logits.dims2()?;
    if labels.len() != b {
        return Err(shape_err!("{} labels for a batch of {b}", labels.len()));
    }
    if b == 0 {
        return Err(invalid!("empty batch"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(invalid!("label {bad} out of range for {c} classes"));
    }
    let mut grad = Tensor::zeros(&[b, c]);
    let mut total = 0.0;
    for ((row, g), &label) in logits
        .data()
        .chunks_exact(c)
        .zip(grad.data_mut().chunks_exact_mut(c))
        .zip(labels)
    {
        let max = row.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let mut z = 0.0;
        for (gi, v) in g.iter_mut().zip(row) {
            *gi = math::exp(v - max);
            z += *gi;
        }
        total += math::ln(z) + max - row[label];
        for gi in g.iter_mut() {
            *gi /= z * b as f64;
        }
        g[label] -= 1.0 / b as f64;
    }
    Ok((total / b as f64, grad))
}
