//! Orthonormal DCT-II (forward) and DCT-III (inverse).
//!
//! With `a(0) = sqrt(1/N)` and `a(k) = sqrt(2/N)` the basis matrix `C` with
//! `C[k][n] = a(k) cos((2n+1)πk / 2N)` is orthogonal, so the inverse is
//! `Cᵀ` and Parseval holds exactly up to rounding.
//!
//! The free functions evaluate the sums directly. [`DctPlan`] caches `C`
//! for repeated use; both paths generate identical coefficients and
//! accumulate in the same order, so they agree bit-for-bit.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::math;
use crate::tensor::{dot, Tensor};

/// Largest length for which [`DctPlan`] materializes the basis matrix.
pub const MAX_PLAN_LEN: usize = 4096;

/// DCT coefficients of a series; bin `k` weights `cos((2n+1)πk / 2N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    coeffs: Vec<f64>,
}

impl Spectrum {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Spectrum { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// Orthonormal scale factor `a(k)` for a length-`n` transform.
pub fn scale(k: usize, n: usize) -> f64 {
    if k == 0 {
        math::sqrt(1.0 / n as f64)
    } else {
        math::sqrt(2.0 / n as f64)
    }
}

/// `a(k) · cos((2i+1)πk / 2n)`, with the angle reduced modulo 2π in exact
/// integer arithmetic before the cosine is taken.
#[inline]
fn coeff(k: usize, i: usize, n: usize) -> f64 {
    let period = 4 * n as u64;
    let m = ((2 * i as u64 + 1) * k as u64) % period;
    scale(k, n) * math::cos(PI * m as f64 / (2 * n) as f64)
}

fn check_input(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(invalid!("transform input must be non-empty"));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(invalid!("non-finite transform input at index {i}"));
    }
    Ok(())
}

/// Forward DCT-II.
pub fn dct(x: &[f64]) -> Result<Spectrum> {
    check_input(x)?;
    let n = x.len();
    let mut row = vec![0.0; n];
    let coeffs = (0..n)
        .map(|k| {
            row.iter_mut()
                .enumerate()
                .for_each(|(i, c)| *c = coeff(k, i, n));
            dot(&row, x)
        })
        .collect();
    Ok(Spectrum { coeffs })
}

/// Inverse transform (DCT-III); `idct(&dct(x)?)? == x` up to rounding.
pub fn idct(spectrum: &Spectrum) -> Result<Vec<f64>> {
    let xs = &spectrum.coeffs;
    check_input(xs)?;
    let n = xs.len();
    let mut out = vec![0.0; n];
    for (k, &c) in xs.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate() {
            *o += coeff(k, i, n) * c;
        }
    }
    Ok(out)
}

/// The `n × n` basis matrix `C`; row `k` is the `k`-th DCT-II basis vector.
pub fn dct_matrix(n: usize) -> Result<Tensor> {
    if n == 0 {
        return Err(invalid!("DCT size must be positive"));
    }
    let mut data = Vec::with_capacity(n * n);
    for k in 0..n {
        data.extend((0..n).map(|i| coeff(k, i, n)));
    }
    Tensor::from_vec(&[n, n], data)
}

/// Precomputed basis for repeated transforms of one length.
#[derive(Debug, Clone, PartialEq)]
pub struct DctPlan {
    n: usize,
    basis: Vec<f64>,
}

impl DctPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_PLAN_LEN {
            return Err(invalid!(
                "DCT plan length {n} exceeds the supported maximum {MAX_PLAN_LEN}"
            ));
        }
        let basis = dct_matrix(n)?.into_data();
        Ok(DctPlan { n, basis })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `out = C · x`. Slices must both have the plan length.
    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (row, o) in self.basis.chunks_exact(self.n).zip(out.iter_mut()) {
            *o = dot(row, x);
        }
    }

    /// `out = Cᵀ · coeffs`.
    pub fn inverse_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (row, &c) in self.basis.chunks_exact(self.n).zip(coeffs) {
            for (o, b) in out.iter_mut().zip(row) {
                *o += b * c;
            }
        }
    }
}

fn map_last_axis(x: &Tensor, apply: impl Fn(&DctPlan, &[f64], &mut [f64])) -> Result<Tensor> {
    let t = x.last_dim();
    check_input(x.data())?;
    let plan = DctPlan::new(t)?;
    let mut out = Tensor::zeros(x.shape());
    for (src, dst) in x
        .data()
        .chunks_exact(t)
        .zip(out.data_mut().chunks_exact_mut(t))
    {
        apply(&plan, src, dst);
    }
    Ok(out)
}

/// DCT-II along the last axis of `x`.
pub fn dct_batch(x: &Tensor) -> Result<Tensor> {
    map_last_axis(x, DctPlan::forward_into)
}

/// DCT-III along the last axis of `x`.
pub fn idct_batch(x: &Tensor) -> Result<Tensor> {
    map_last_axis(x, DctPlan::inverse_into)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Textbook evaluation of the forward sum, kept independent of `coeff`.
    fn naive_dct(x: &[f64]) -> Vec<f64> {
        let n = x.len() as f64;
        (0..x.len())
            .map(|k| {
                let a = if k == 0 {
                    (1.0 / n).sqrt()
                } else {
                    (2.0 / n).sqrt()
                };
                a * x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * ((2.0 * i as f64 + 1.0) * PI * k as f64 / (2.0 * n)).cos())
                    .sum::<f64>()
            })
            .collect()
    }

    fn lcg(seed: u64, len: usize) -> Vec<f64> {
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (0..len)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn zeros_map_to_zeros() {
        assert_eq!(dct(&[0.0; 8]).unwrap().coeffs(), &[0.0; 8]);
    }

    #[test]
    fn constant_lands_in_dc_bin() {
        let sp = dct(&[1.0; 4]).unwrap();
        assert!((sp.coeffs()[0] - 2.0).abs() < 1e-15);
        for c in &sp.coeffs()[1..] {
            assert!(c.abs() < 1e-15, "{c}");
        }
    }

    #[test]
    fn delta_matches_direct_evaluation() {
        let sp = dct(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        // a(k)·cos(πk/8)
        let expected = [
            0.5,
            0.5f64.sqrt() * (PI / 8.0).cos(),
            0.5f64.sqrt() * (2.0 * PI / 8.0).cos(),
            0.5f64.sqrt() * (3.0 * PI / 8.0).cos(),
        ];
        for (a, b) in sp.coeffs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn dc_spectrum_inverts_to_flat_series() {
        let x = idct(&Spectrum::new(vec![1.0, 0.0, 0.0, 0.0])).unwrap();
        for v in x {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn one_hot_bin_inverts_to_basis_row() {
        let mut c = vec![0.0; 8];
        c[2] = 1.0;
        let x = idct(&Spectrum::new(c)).unwrap();
        for (i, v) in x.iter().enumerate() {
            let expected = (2.0f64 / 8.0).sqrt() * ((2.0 * i as f64 + 1.0) * 2.0 * PI / 16.0).cos();
            assert!((v - expected).abs() < 1e-14, "{i}: {v} vs {expected}");
        }
    }

    #[test]
    fn round_trip_length_128() {
        let x = lcg(7, 128);
        let back = idct(&dct(&x).unwrap()).unwrap();
        let err = x
            .iter()
            .zip(&back)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn matrix_of_size_one() {
        assert_eq!(dct_matrix(1).unwrap().data(), &[1.0]);
    }

    #[test]
    fn matrix_is_orthonormal() {
        let n = 4;
        let c = dct_matrix(n).unwrap();
        let c = c.data();
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|m| c[i * n + m] * c[j * n + m]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((dot - target).abs() < 1e-12, "({i},{j}) = {dot}");
            }
        }
    }

    #[test]
    fn summation_and_matrix_agree_with_textbook_sum() {
        let x = lcg(3, 16);
        let c = dct_matrix(16).unwrap();
        let via_matrix: Vec<f64> = c
            .data()
            .chunks_exact(16)
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        let direct = dct(&x).unwrap();
        let naive = naive_dct(&x);
        for k in 0..16 {
            assert!((via_matrix[k] - direct.coeffs()[k]).abs() < 1e-10);
            assert!((naive[k] - direct.coeffs()[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(dct(&[]), Err(crate::Error::InvalidArgument(_))));
        assert!(matches!(
            dct(&[1.0, f64::NAN]),
            Err(crate::Error::InvalidArgument(_))
        ));
        assert!(matches!(
            idct(&Spectrum::new(vec![f64::INFINITY])),
            Err(crate::Error::InvalidArgument(_))
        ));
        assert!(matches!(
            dct_matrix(0),
            Err(crate::Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn batch_wrapper_is_bit_identical_to_unbatched() {
        let x = lcg(11, 37);
        let t = Tensor::from_vec(&[1, 1, 37], x.clone()).unwrap();
        let batched = dct_batch(&t).unwrap();
        assert_eq!(batched.data(), dct(&x).unwrap().coeffs());
        let inv = idct_batch(&batched).unwrap();
        assert_eq!(inv.data(), &idct(&dct(&x).unwrap()).unwrap()[..]);
    }

    #[test]
    fn identical_rows_give_identical_spectra() {
        let x = lcg(5, 20);
        let mut data = x.clone();
        data.extend(&x);
        let out = dct_batch(&Tensor::from_vec(&[2, 1, 20], data).unwrap()).unwrap();
        assert_eq!(out.data()[..20], out.data()[20..]);
    }

    #[test]
    fn batch_round_trip() {
        let t = Tensor::from_vec(&[4, 3, 32], lcg(9, 4 * 3 * 32)).unwrap();
        let back = idct_batch(&dct_batch(&t).unwrap()).unwrap();
        let err = t
            .data()
            .iter()
            .zip(back.data())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-9);
    }
}
