//! Differentiable building blocks: 1-D convolutions, activations, gating and
//! channel normalization, all recorded on an [`autodiff::Tape`](crate::autodiff::Tape).

mod activation;
mod conv;
mod norm;

pub use activation::{activation, glu, leaky_relu, prelu, relu, sigmoid, Activation};
pub use conv::{conv1d, transposed_conv1d, Conv1dSpec, Padding};
pub use norm::{channel_norm, NormMode, NORM_EPS};

