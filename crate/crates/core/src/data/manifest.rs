use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::folds::FoldSplit;
use super::scale::MinMaxScale;
use crate::error::DataError;

/// Structured description of a prepared dataset, written next to the
/// window cache.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset: String,
    pub houses: Vec<u32>,
    pub sample_period: f64,
    pub window_len: usize,
    pub window_count: usize,
    pub dropped_samples: usize,
    pub scale: MinMaxScale,
    pub aggregate: String,
    pub appliances: Vec<String>,
    pub channels: Vec<ChannelEntry>,
    pub folds: Vec<FoldEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelEntry {
    pub channel: u32,
    pub name: String,
    pub energy_kwh: f64,
    pub selected: bool,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldEntry {
    pub fold: usize,
    pub validation: Vec<usize>,
}

impl FoldEntry {
    pub fn from_split(s: &FoldSplit) -> Self {
        Self {
            fold: s.fold,
            validation: s.validation.clone(),
        }
    }
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| DataError::Format(e.to_string()))
    }
}
