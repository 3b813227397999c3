//! Over-and-under complete convolutional recurrent reconstruction of
//! undersampled MR images.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense tensors and a reverse-mode differentiation tape with
//!   exactly the primitives the network needs (3x3 conv, 2x2 max-pool,
//!   nearest 2x upsampling, ReLU, add, channel concat, centered FFT, L1).
//! * [`kspace`]: Cartesian column masks, the undersampled encoding operator,
//!   zero filling and the hard data-consistency projection.
//! * [`model`]: the overcomplete and undercomplete recurrent branches, the
//!   refine module, their composition, checkpoints and a receptive-field probe.
//! * [`training`]: Adam, the step learning-rate schedule and the trainer.
//! * [`data`]: synthetic phantoms, the on-disk dataset format and splits.
//! * [`eval`]: PSNR / SSIM, k-space band analysis and report emission.
//! * [`cs`]: FISTA compressed-sensing baseline with TV or Haar-l1 priors.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root name the common instantiations.

pub mod cs;
pub mod data;
pub mod error;
pub mod eval;
pub mod image;
mod json;
pub mod kspace;
pub mod model;
pub mod parallel;
pub mod scalar;
pub mod tensor;
pub mod training;

pub use error::{Error, ErrorClass, Result};
pub use image::{fft2c, ifft2c, ComplexImage, MagnitudeImage};
pub use scalar::Scalar;
pub use tensor::{Graph, Tensor, Var};

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type Graph64 = Graph<f64>;
pub type Graph32 = Graph<f32>;
pub type ParamSet64 = model::ParamSet<f64>;
pub type ParamSet32 = model::ParamSet<f32>;
pub type Sample64 = data::Sample<f64>;
pub type Sample32 = data::Sample<f32>;
pub type ComplexImage64 = ComplexImage<f64>;
pub type ComplexImage32 = ComplexImage<f32>;





/// Version string recorded in every output directory.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
