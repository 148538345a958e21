//! Binary window cache.
//!
//! ```text
//! magic "NILMW1" | u32 appliances C | u32 windows W | u64 window length T
//! f64 scale min | f64 scale max | f64 sample period
//! C x { u32 len, utf8 name }
//! W x { i64 start, T x f64 mixture, C*T x f64 targets }
//! ```
//! All integers and floats little-endian; signals are stored scaled.

use std::fs;
use std::path::Path;

use super::scale::MinMaxScale;
use super::window::SignalWindow;
use crate::binio::{Reader, Writer};
use crate::error::DataError;

pub const CACHE_MAGIC: &[u8; 6] = b"NILMW1";

#[derive(Clone, Debug, PartialEq)]
pub struct WindowCache {
    pub names: Vec<String>,
    pub scale: MinMaxScale,
    pub period: f64,
    pub windows: Vec<SignalWindow>,
}

impl WindowCache {
    pub fn window_len(&self) -> usize {
        self.windows.first().map_or(0, SignalWindow::len)
    }

    pub fn appliances(&self) -> usize {
        self.names.len()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, DataError> {
        let c = self.names.len();
        let t = self.window_len();
        for w in &self.windows {
            if w.len() != t || w.targets.len() != c || w.targets.iter().any(|x| x.len() != t) {
                return Err(DataError::Format("windows disagree on shape".into()));
            }
        }
        let mut out = Writer::new();
        out.bytes(CACHE_MAGIC);
        out.u32(c as u32);
        out.u32(self.windows.len() as u32);
        out.u64(t as u64);
        out.f64(self.scale.min);
        out.f64(self.scale.max);
        out.f64(self.period);
        for n in &self.names {
            out.str(n);
        }
        for w in &self.windows {
            out.i64(w.start);
            out.f64s(&w.mixture);
            for target in &w.targets {
                out.f64s(target);
            }
        }
        Ok(out.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DataError> {
        let fmt = DataError::Format;
        let mut r = Reader::new(bytes);
        let magic = r.take(6).map_err(fmt)?;
        if magic != CACHE_MAGIC {
            return Err(fmt(format!("bad magic {magic:?}, expected \"NILMW1\"")));
        }
        let c = r.u32().map_err(fmt)? as usize;
        let w = r.u32().map_err(fmt)? as usize;
        let t = r.u64().map_err(fmt)? as usize;
        let scale = MinMaxScale {
            min: r.f64().map_err(fmt)?,
            max: r.f64().map_err(fmt)?,
        };
        let period = r.f64().map_err(fmt)?;
        let names = (0..c)
            .map(|_| r.str().map_err(fmt))
            .collect::<Result<Vec<_>, _>>()?;
        let mut windows = Vec::with_capacity(w);
        for _ in 0..w {
            let start = r.i64().map_err(fmt)?;
            let mixture = r.f64s(t).map_err(fmt)?;
            let targets = (0..c)
                .map(|_| r.f64s(t).map_err(fmt))
                .collect::<Result<Vec<_>, _>>()?;
            windows.push(SignalWindow {
                mixture,
                targets,
                scale,
                start,
            });
        }
        if !r.is_done() {
            return Err(fmt("trailing bytes".into()));
        }
        Ok(Self {
            names,
            scale,
            period,
            windows,
        })
    }
}

pub fn write_cache(path: impl AsRef<Path>, cache: &WindowCache) -> Result<(), DataError> {
    fs::write(path, cache.to_bytes()?)?;
    Ok(())
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<WindowCache, DataError> {
    WindowCache::from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let scale = MinMaxScale { min: 1.0, max: 3.0 };
        let cache = WindowCache {
            names: vec!["a".into(), "bb".into()],
            scale,
            period: 6.0,
            windows: (0..3)
                .map(|i| SignalWindow {
                    mixture: vec![i as f64; 4],
                    targets: vec![vec![0.25; 4], vec![-0.5 * i as f64; 4]],
                    scale,
                    start: 100 * i,
                })
                .collect(),
        };
        let bytes = cache.to_bytes().unwrap();
        assert_eq!(&bytes[..6], b"NILMW1");
        assert_eq!(bytes.len(), 6 + 4 + 4 + 8 + 24 + (4 + 1) + (4 + 2) + 3 * (8 + 12 * 8));
        assert_eq!(WindowCache::from_bytes(&bytes).unwrap(), cache);
        let mut bad = bytes.clone();
        bad[2] = 0;
        assert!(WindowCache::from_bytes(&bad).is_err());
        assert!(WindowCache::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
