//! Run configuration file: one TOML table per module.
//!
//! ```toml
//! [model]
//! n_filters = 32
//! [train]
//! epochs = 2000
//! [data]
//! window_len = 14400
//! ```
//!
//! Every key is optional and defaults to the standard settings.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::ModelConfig;
use crate::train::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Samples per window; the dataset's own window length when absent.
    pub window_len: Option<usize>,
    /// Hop between windows; equal to the window length when absent.
    pub window_stride: Option<usize>,
    /// Appliances kept by `prepare`.
    pub top: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            window_len: None,
            window_stride: None,
            top: 5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data: DataConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
