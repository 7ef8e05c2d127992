//! # choreo
//!
//! Music-driven dance generation with an autoregressive encoder-decoder of
//! causal dilated highway convolutions.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: `Tensor2D`, causal convolutions, activations, L1 loss, a
//!   small reverse-mode tape and the Adam optimizer.
//! - [`signal`]: WAV input, linear resampling, frame-rate aligned
//!   mel-spectrograms and autocorrelation.
//! - [`skeleton`]: pose ingestion (keypoint JSON / CSV), gap interpolation,
//!   per-clip min-max normalisation and 44-dimensional frame vectors.
//! - [`model`]: the network, teacher-forced forward pass, autoregressive
//!   generation and checkpoints.
//! - [`training`]: windowing, the combined L1 + limb-length objective and
//!   the training loop.
//! - [`analysis`]: motion autocorrelation against a beat grid.
//! - [`cli`]: the `choreo` command-line surface.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod model;
pub mod numerics;
pub mod signal;
pub mod skeleton;
pub mod training;

pub use error::{Error, Result};
