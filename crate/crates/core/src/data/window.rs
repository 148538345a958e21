use log::info;

use super::scale::MinMaxScale;
use crate::error::DataError;

/// Aligned aggregate and per-appliance signals in watts on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub names: Vec<String>,
    pub mixture: Vec<f64>,
    pub targets: Vec<Vec<f64>>,
    /// Unix seconds of the first sample.
    pub start: i64,
    /// Seconds between samples.
    pub period: f64,
}

impl Series {
    pub fn len(&self) -> usize {
        self.mixture.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mixture.is_empty()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.names.len() != self.targets.len() {
            return Err(DataError::LengthMismatch {
                expected: self.targets.len(),
                actual: self.names.len(),
            });
        }
        for t in &self.targets {
            if t.len() != self.mixture.len() {
                return Err(DataError::LengthMismatch {
                    expected: self.mixture.len(),
                    actual: t.len(),
                });
            }
        }
        Ok(())
    }
}

/// One training example: a scaled mixture and its appliance targets on the
/// same scale.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalWindow {
    pub mixture: Vec<f64>,
    pub targets: Vec<Vec<f64>>,
    pub scale: MinMaxScale,
    pub start: i64,
}

impl SignalWindow {
    pub fn len(&self) -> usize {
        self.mixture.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mixture.is_empty()
    }

    pub fn appliances(&self) -> usize {
        self.targets.len()
    }

    /// Targets flattened `[C * T]` row-major.
    pub fn targets_flat(&self) -> Vec<f64> {
        self.targets.concat()
    }

    pub fn targets_watts(&self) -> Vec<Vec<f64>> {
        self.targets.iter().map(|t| self.scale.invert(t)).collect()
    }
}

/// Cuts `series` into windows of `window` samples every `stride` samples,
/// scaling mixture and targets with `scale`. A trailing partial window is
/// dropped. No smoothing is applied.
pub fn window_split(
    series: &Series,
    scale: MinMaxScale,
    window: usize,
    stride: usize,
) -> Result<Vec<SignalWindow>, DataError> {
    series.validate()?;
    let len = series.len();
    if window == 0 || stride == 0 {
        return Err(DataError::Invalid("window and stride must be positive".into()));
    }
    if window > len {
        return Err(DataError::Invalid(format!(
            "window of {window} samples exceeds series length {len}"
        )));
    }
    let count = (len - window) / stride + 1;
    let used = (count - 1) * stride + window;
    if used < len {
        info!("window_split: dropping {} trailing samples", len - used);
    }
    Ok((0..count)
        .map(|w| {
            let off = w * stride;
            let range = off..off + window;
            SignalWindow {
                mixture: scale.apply(&series.mixture[range.clone()]),
                targets: series
                    .targets
                    .iter()
                    .map(|t| scale.apply(&t[range.clone()]))
                    .collect(),
                scale,
                start: series.start + (off as f64 * series.period).round() as i64,
            }
        })
        .collect())
}
