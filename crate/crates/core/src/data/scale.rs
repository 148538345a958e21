use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// Min-max scale fitted on the aggregate signal and shared by every
/// appliance target, so no per-appliance statistics are needed at inference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScale {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScale {
    pub fn fit(signal: &[f64]) -> Result<Self, DataError> {
        if signal.is_empty() {
            return Err(DataError::Invalid("cannot fit a scale on an empty signal".into()));
        }
        let min = signal.iter().copied().fold(f64::INFINITY, f64::min);
        let max = signal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max <= min {
            return Err(DataError::ConstantSignal(min));
        }
        Ok(Self { min, max })
    }

    /// Fits on `signal` and returns it scaled into `[0, 1]`.
    pub fn fit_transform(signal: &[f64]) -> Result<(Vec<f64>, Self), DataError> {
        let s = Self::fit(signal)?;
        Ok((s.apply(signal), s))
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn apply_one(&self, x: f64) -> f64 {
        (x - self.min) / self.range()
    }

    pub fn invert_one(&self, x: f64) -> f64 {
        x * self.range() + self.min
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.apply_one(v)).collect()
    }

    pub fn invert(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.invert_one(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_case() {
        let (s, scale) = MinMaxScale::fit_transform(&[0.0, 5.0, 10.0]).unwrap();
        assert_eq!(s, vec![0.0, 0.5, 1.0]);
        assert_eq!(scale, MinMaxScale { min: 0.0, max: 10.0 });
    }

    #[test]
    fn constant_signal_is_an_error() {
        assert!(matches!(
            MinMaxScale::fit(&[3.0, 3.0, 3.0]),
            Err(DataError::ConstantSignal(v)) if v == 3.0
        ));
    }
}
