use std::fs;
use std::path::{Path, PathBuf};

use crate::error::DataError;

/// One meter channel as `(unix seconds, watts)` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSeries {
    pub name: String,
    pub samples: Vec<(i64, f64)>,
    /// Median spacing between samples in seconds (1 for a single sample).
    pub period: f64,
}

impl ChannelSeries {
    pub fn new(name: impl Into<String>, samples: Vec<(i64, f64)>) -> Self {
        let period = median_period(&samples);
        Self {
            name: name.into(),
            samples,
            period,
        }
    }

    pub fn first_ts(&self) -> i64 {
        self.samples[0].0
    }

    pub fn last_ts(&self) -> i64 {
        self.samples[self.samples.len() - 1].0
    }
}

fn median_period(samples: &[(i64, f64)]) -> f64 {
    let mut gaps: Vec<i64> = samples.windows(2).map(|w| w[1].0 - w[0].0).collect();
    if gaps.is_empty() {
        return 1.0;
    }
    gaps.sort_unstable();
    gaps[gaps.len() / 2] as f64
}

/// Parses `"<unix-seconds> <watts>"` lines. Blank lines are skipped; anything
/// else that does not parse, or a timestamp that fails to increase, is an
/// error naming the 1-based line.
pub fn parse_channel_str(text: &str, path: &Path, name: &str) -> Result<ChannelSeries, DataError> {
    let mut samples: Vec<(i64, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| DataError::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg,
        };
        let mut parts = line.split_whitespace();
        let (Some(ts), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(format!("expected \"<timestamp> <watts>\", got {line:?}")));
        };
        let ts: i64 = ts
            .parse()
            .map_err(|_| err(format!("bad timestamp {ts:?}")))?;
        let p: f64 = p.parse().map_err(|_| err(format!("bad power value {p:?}")))?;
        if !p.is_finite() {
            return Err(err(format!("non-finite power {p}")));
        }
        if let Some(&(prev, _)) = samples.last() {
            if ts <= prev {
                return Err(DataError::NonMonotonic {
                    path: path.to_path_buf(),
                    line: lineno,
                    ts,
                });
            }
        }
        samples.push((ts, p));
    }
    if samples.is_empty() {
        return Err(DataError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "no samples".into(),
        });
    }
    Ok(ChannelSeries::new(name, samples))
}

pub fn parse_channel_file(path: impl AsRef<Path>) -> Result<ChannelSeries, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_channel_str(&text, path, &name)
}

/// Shortest text that parses back to the same `f64`.
pub fn format_channel(series: &ChannelSeries) -> String {
    let mut out = String::with_capacity(series.samples.len() * 20);
    for (ts, p) in &series.samples {
        out.push_str(&format!("{ts} {p}\n"));
    }
    out
}

pub fn write_channel_file(path: impl AsRef<Path>, series: &ChannelSeries) -> Result<(), DataError> {
    fs::write(path, format_channel(series))?;
    Ok(())
}

/// Parses a labels file of `"<channel> <name>"` lines.
pub fn parse_labels(path: impl AsRef<Path>) -> Result<Vec<(u32, String)>, DataError> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let text = fs::read_to_string(&path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (num, name) = line.split_once(char::is_whitespace).ok_or_else(|| DataError::Parse {
            path: path.clone(),
            line: i + 1,
            msg: format!("expected \"<channel> <name>\", got {line:?}"),
        })?;
        let num: u32 = num.parse().map_err(|_| DataError::Parse {
            path: path.clone(),
            line: i + 1,
            msg: format!("bad channel number {num:?}"),
        })?;
        out.push((num, name.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ChannelSeries, DataError> {
        parse_channel_str(text, Path::new("test.dat"), "test")
    }

    #[test]
    fn two_samples() {
        let s = parse("1303132964 41.2\n1303132965 42.0").unwrap();
        assert_eq!(s.samples, vec![(1303132964, 41.2), (1303132965, 42.0)]);
        assert_eq!(s.period, 1.0);
    }

    #[test]
    fn duplicate_timestamp_names_line() {
        let err = parse("10 1\n11 2\n11 3\n").unwrap_err();
        assert!(matches!(err, DataError::NonMonotonic { line: 3, ts: 11, .. }));
        assert!(err.to_string().contains(":3:"));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse("10 1\nabc 2\n"), Err(DataError::Parse { line: 2, .. })));
        assert!(matches!(parse("10 1 5\n"), Err(DataError::Parse { line: 1, .. })));
        assert!(matches!(parse("10 nan\n"), Err(DataError::Parse { line: 1, .. })));
        assert!(parse("\n\n").is_err());
    }

    #[test]
    fn write_then_parse_is_bit_identical() {
        let samples: Vec<(i64, f64)> = (0..1000)
            .map(|i| {
                let x = i as f64;
                (1_303_132_964 + 3 * i, (x * 0.7).sin() * 123.456 + x / 7.0)
            })
            .collect();
        let s = ChannelSeries::new("fixture", samples);
        let back = parse(&format_channel(&s)).unwrap();
        assert_eq!(back.samples.len(), 1000);
        for (a, b) in s.samples.iter().zip(&back.samples) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1.to_bits(), b.1.to_bits());
        }
        assert_eq!(back.period, 3.0);
    }
}
