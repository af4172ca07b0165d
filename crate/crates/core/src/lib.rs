//! Spectrum attention (SAM / SSAM) layers for univariate time-series
//! classification, the small two-block CNN they feed, and its trainer.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the filesystem live in the `ssam-cli` crate.
//!
//! Layout:
//! - [`transform`]: orthonormal DCT-II / DCT-III pair.
//! - [`layers`]: layers with hand-written forward and backward passes.
//! - [`model`]: the SSAM-CNN network, its config and the L1-regularized SGD step.
//! - [`data`]: synthetic generators, UCR text parsing, normalization, splits, batching.
//! - [`training`]: epoch loop with best-validation checkpointing, K search, evaluation.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod training;
pub mod transform;

pub use error::{Error, Result};
pub use tensor::Tensor;

pub(crate) mod math {
    //! Float helpers routed through `libm` so the crate builds without `std`.
    #[inline]
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
}
