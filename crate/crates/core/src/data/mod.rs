//! Dataset ingestion and preparation: channel files, resampling, min-max
//! scaling, windowing, synthetic appliances, time-blocked folds and the
//! on-disk window cache.

mod aggregate;
mod cache;
mod channel;
mod folds;
mod house;
mod manifest;
mod resample;
mod scale;
mod synth;
mod window;

pub use aggregate::build_aggregate;
pub use cache::{read_cache, write_cache, WindowCache, CACHE_MAGIC};
pub use channel::{
    format_channel, parse_channel_file, parse_channel_str, parse_labels, write_channel_file,
    ChannelSeries,
};
pub use folds::{kfold_split, FoldSplit};
pub use house::{load_house, AggregateSource, DatasetKind, HouseData, PreparedHouse};
pub use manifest::{ChannelEntry, FoldEntry, Manifest};
pub use resample::{resample_linear, resample_onto, MAX_GAP_SECONDS};
pub use scale::MinMaxScale;
pub use synth::{default_specs, gen_synthetic, ApplianceKind, ApplianceSpec, SynthSpecFile};
pub use window::{window_split, Series, SignalWindow};
