//! Conv-NILM network: learned encoder filterbank, temporal-convolution mask
//! separator and shared decoder filterbank.

mod checkpoint;
mod config;
mod net;
mod params;
mod receptive;
mod stream;

pub use checkpoint::{Checkpoint, CheckpointMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{HiddenActivation, ModelConfig, NormKind, Variant};
pub use net::{apply_masks, decode, encode, separate, ConvNilm, ForwardParts};
pub use params::{param_breakdown, param_count, param_layout, BoundParams, ParamSpec, ParamStore};
pub use receptive::{receptive_field, ReceptiveField};
pub use stream::stream_predict;
