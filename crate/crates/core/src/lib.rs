//! Conv-NILM: a fully convolutional encoder / mask separator / decoder
//! network for single-channel energy disaggregation.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`] and [`autodiff`]: dense arrays and a define-by-run
//!   reverse-mode tape.
//! - [`nn`]: convolutions, activations, gating and channel normalization.
//! - [`model`]: the encoder, temporal-convolution separator and decoder,
//!   receptive-field and parameter accounting, checkpoints and streaming.
//! - [`data`]: channel-file ingestion, resampling, scaling, windowing,
//!   synthetic appliances and time-blocked folds.
//! - [`train`]: window MSE loss, Adam and the cross-validated training loop.
//! - [`metrics`]: MAE, estimated accuracy and signal aggregate error.

pub mod autodiff;
mod binio;
pub mod config;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod tensor;
pub mod train;

pub use error::{DataError, MetricsError, ModelError, TensorError, TrainError};
pub use tensor::Tensor;
