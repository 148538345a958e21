use log::info;

use super::channel::ChannelSeries;
use crate::error::DataError;

/// Neighbouring samples further apart than this are treated as missing data.
pub const MAX_GAP_SECONDS: f64 = 60.0;

/// Linear interpolation onto the uniform grid `first, first + period, ..`
/// up to the last timestamp.
pub fn resample_linear(series: &ChannelSeries, period: f64) -> Result<Vec<f64>, DataError> {
    if period <= 0.0 || !period.is_finite() {
        return Err(DataError::Invalid(format!("period must be positive, got {period}")));
    }
    let span = (series.last_ts() - series.first_ts()) as f64;
    let len = (span / period).floor() as usize + 1;
    resample_onto(series, series.first_ts() as f64, period, len)
}

/// Linear interpolation onto `start + j * period` for `j < len`.
///
/// Grid points strictly inside a gap longer than [`MAX_GAP_SECONDS`], or
/// outside the recorded span, are set to 0 W. Points that land on a sample
/// take its value exactly.
pub fn resample_onto(
    series: &ChannelSeries,
    start: f64,
    period: f64,
    len: usize,
) -> Result<Vec<f64>, DataError> {
    let s = &series.samples;
    if s.is_empty() {
        return Err(DataError::Invalid(format!("{}: empty series", series.name)));
    }
    if s.len() == 1 && len > 1 {
        return Err(DataError::Invalid(format!(
            "{}: a single sample cannot fill a {len}-point grid",
            series.name
        )));
    }
    let mut out = Vec::with_capacity(len);
    let mut i = 0usize;
    let mut gap_points = 0usize;
    for j in 0..len {
        let t = start + j as f64 * period;
        while i + 1 < s.len() && (s[i + 1].0 as f64) < t {
            i += 1;
        }
        let (t0, v0) = (s[i].0 as f64, s[i].1);
        let v = if t == t0 {
            v0
        } else if i + 1 < s.len() {
            let (t1, v1) = (s[i + 1].0 as f64, s[i + 1].1);
            if t == t1 {
                v1
            } else if t < t0 {
                0.0
            } else if t1 - t0 > MAX_GAP_SECONDS {
                gap_points += 1;
                0.0
            } else {
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        } else {
            0.0
        };
        out.push(v);
    }
    if gap_points > 0 {
        info!(
            "{}: zero-filled {gap_points} grid points inside gaps longer than {MAX_GAP_SECONDS} s",
            series.name
        );
    }
    Ok(out)
}
