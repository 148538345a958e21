use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;

use super::channel::{parse_channel_file, parse_labels, ChannelSeries};
use super::manifest::ChannelEntry;
use super::resample::resample_onto;
use super::window::Series;
use crate::error::DataError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    Redd,
    UkDale,
}

impl DatasetKind {
    /// Grid period in seconds used for the prepared signals.
    pub fn period(self) -> f64 {
        match self {
            DatasetKind::Redd => 1.0,
            DatasetKind::UkDale => 6.0,
        }
    }

    pub fn default_source(self) -> AggregateSource {
        match self {
            DatasetKind::Redd => AggregateSource::Mains,
            DatasetKind::UkDale => AggregateSource::Sum {
                extra: Some("television".into()),
            },
        }
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "redd" => Ok(DatasetKind::Redd),
            "ukdale" | "uk-dale" => Ok(DatasetKind::UkDale),
            other => Err(format!("unknown dataset {other:?} (expected redd or ukdale)")),
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Redd => "redd",
            DatasetKind::UkDale => "ukdale",
        })
    }
}

/// How the aggregate signal is formed.
#[derive(Clone, Debug, PartialEq)]
pub enum AggregateSource {
    /// Sum of the channels labelled `mains` or `aggregate`.
    Mains,
    /// Sum of the selected appliances plus an optional extra, non-target
    /// appliance named in the labels file.
    Sum { extra: Option<String> },
}

impl fmt::Display for AggregateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateSource::Mains => f.write_str("mains"),
            AggregateSource::Sum { extra: None } => f.write_str("sum"),
            AggregateSource::Sum { extra: Some(e) } => write!(f, "sum+{e}"),
        }
    }
}

/// A house directory: `labels.dat` plus one `channel_<n>.dat` per label.
#[derive(Clone, Debug)]
pub struct HouseData {
    pub dir: PathBuf,
    pub channels: Vec<(u32, ChannelSeries)>,
}

#[derive(Clone, Debug)]
pub struct PreparedHouse {
    pub series: Series,
    pub channels: Vec<ChannelEntry>,
    pub aggregate: String,
}

fn is_mains(name: &str) -> bool {
    matches!(name.to_ascii_lowercase().as_str(), "mains" | "aggregate")
}

pub fn load_house(dir: impl AsRef<Path>) -> Result<HouseData, DataError> {
    let dir = dir.as_ref().to_path_buf();
    let labels_path = dir.join("labels.dat");
    if !labels_path.exists() {
        return Err(DataError::Invalid(format!("missing {}", labels_path.display())));
    }
    let labels = parse_labels(&labels_path)?;
    if labels.is_empty() {
        return Err(DataError::Invalid(format!("{} lists no channels", labels_path.display())));
    }
    let channels = labels
        .par_iter()
        .map(|(num, name)| {
            let path = dir.join(format!("channel_{num}.dat"));
            if !path.exists() {
                return Err(DataError::Invalid(format!(
                    "missing channel file {} for {name}",
                    path.display()
                )));
            }
            let mut series = parse_channel_file(&path)?;
            series.name = name.clone();
            Ok((*num, series))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HouseData { dir, channels })
}

impl HouseData {
    /// Aligns every channel on a common grid, keeps the `top_k` appliances
    /// with the highest energy over that span and forms the aggregate.
    pub fn prepare(
        &self,
        kind: DatasetKind,
        top_k: usize,
        source: &AggregateSource,
    ) -> Result<PreparedHouse, DataError> {
        if top_k == 0 {
            return Err(DataError::Invalid("top must be at least 1".into()));
        }
        let period = kind.period();
        let start = self.channels.iter().map(|(_, s)| s.first_ts()).max().unwrap_or(0);
        let end = self.channels.iter().map(|(_, s)| s.last_ts()).min().unwrap_or(0);
        if end <= start {
            return Err(DataError::Invalid("channels share no common time span".into()));
        }
        let len = ((end - start) as f64 / period).floor() as usize + 1;
        info!("house {}: common grid of {len} points from {start}", self.dir.display());

        let grids = self
            .channels
            .par_iter()
            .map(|(_, s)| resample_onto(s, start as f64, period, len))
            .collect::<Result<Vec<_>, _>>()?;

        let mut counts: HashMap<&str, usize> = HashMap::new();
        for (_, s) in &self.channels {
            *counts.entry(s.name.as_str()).or_default() += 1;
        }
        let display = |num: u32, name: &str| {
            if counts[name] > 1 {
                format!("{name}_{num}")
            } else {
                name.to_string()
            }
        };

        let extra_name = match source {
            AggregateSource::Sum { extra: Some(e) } => Some(e.as_str()),
            _ => None,
        };
        let extra_idx = extra_name.and_then(|e| self.channels.iter().position(|(_, s)| s.name == e));
        if let (Some(e), None) = (extra_name, extra_idx) {
            warn!("extra appliance {e:?} not found; aggregate is the sum of the selected appliances");
        }

        let energy: Vec<f64> = grids.iter().map(|g| g.iter().sum::<f64>() * period / 3.6e6).collect();
        let mut candidates: Vec<usize> = (0..self.channels.len())
            .filter(|&i| !is_mains(&self.channels[i].1.name) && Some(i) != extra_idx)
            .collect();
        if candidates.len() < top_k {
            return Err(DataError::Invalid(format!(
                "asked for {top_k} appliances but only {} appliance channels exist",
                candidates.len()
            )));
        }
        candidates.sort_by(|&a, &b| {
            energy[b]
                .total_cmp(&energy[a])
                .then(self.channels[a].0.cmp(&self.channels[b].0))
        });
        let selected: Vec<usize> = candidates[..top_k].to_vec();

        let mixture = match source {
            AggregateSource::Mains => {
                let mains: Vec<usize> = (0..self.channels.len())
                    .filter(|&i| is_mains(&self.channels[i].1.name))
                    .collect();
                if mains.is_empty() {
                    return Err(DataError::Invalid("no mains channel in labels".into()));
                }
                (0..len).map(|t| mains.iter().map(|&i| grids[i][t]).sum()).collect()
            }
            AggregateSource::Sum { .. } => (0..len)
                .map(|t| selected.iter().chain(extra_idx.iter()).map(|&i| grids[i][t]).sum())
                .collect(),
        };

        let channels = self
            .channels
            .iter()
            .enumerate()
            .map(|(i, (num, s))| ChannelEntry {
                channel: *num,
                name: display(*num, &s.name),
                energy_kwh: energy[i],
                selected: selected.contains(&i),
                role: if is_mains(&s.name) {
                    "mains"
                } else if Some(i) == extra_idx {
                    "extra"
                } else if selected.contains(&i) {
                    "target"
                } else {
                    "unused"
                }
                .to_string(),
            })
            .collect();

        let series = Series {
            names: selected
                .iter()
                .map(|&i| display(self.channels[i].0, &self.channels[i].1.name))
                .collect(),
            mixture,
            targets: selected.iter().map(|&i| grids[i].clone()).collect(),
            start,
            period,
        };
        Ok(PreparedHouse {
            series,
            channels,
            aggregate: source.to_string(),
        })
    }
}
