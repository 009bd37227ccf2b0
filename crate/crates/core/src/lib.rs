//! Frequency-aware latent compression for video tensors.
//!
//! The pipeline: a dense rank-4 [`tensor::VideoTensor`] is decomposed by the
//! orthonormal 3D Haar transform ([`wavelet::wt3d`]) or its three-stage
//! multi-level variant ([`wavelet::multi_wt`]); high-frequency subbands are
//! zeroed by a [`compression::SubbandMask`] and the survivors stored in a
//! packed container ([`compression::PackedLatent`]); [`analytics`] provides
//! the energy/autocorrelation diagnostics that motivate the fixed mask; and
//! [`toyae`] is a desk-scale trainable autoencoder for comparing joint
//! training against post-training latent compression.

pub mod analytics;
pub mod compression;
pub mod error;
pub mod tensor;
pub mod toyae;
pub mod wavelet;

pub use error::{Error, Result};
pub use tensor::{DynTensor, Dtype, Element, Shape, VideoTensor};
pub use wavelet::{MultiWTLabel, MultiWTSet, SubbandLabel3D, SubbandSet};
