//! Binary checkpoint container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "CNN1" | u32 version
//! config: u32 N L S B H P X R C | u8 causal | u8 glu | u8 norm | u8 activation | f64 leaky_slope
//! meta:   u8 has_scale [f64 min f64 max] | f64 sample_period | u32 fold | u32 epoch
//!         u32 n_names { u32 len, utf8 }
//! params: u32 count { u32 name_len, utf8 name, u32 rank, u64 dims.., f64 data.. }
//! ```

use std::fs;
use std::path::Path;

use super::config::{HiddenActivation, ModelConfig, NormKind};
use super::net::ConvNilm;
use super::params::ParamStore;
use crate::binio::{Reader, Writer};
use crate::data::MinMaxScale;
use crate::error::ModelError;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CNN1";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything besides the weights needed to run a checkpoint on raw watts.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointMeta {
    pub scale: Option<MinMaxScale>,
    /// Seconds between samples of the data the model was trained on.
    pub sample_period: f64,
    pub appliances: Vec<String>,
    pub fold: u32,
    pub epoch: u32,
}

impl Default for CheckpointMeta {
    fn default() -> Self {
        Self {
            scale: None,
            sample_period: 1.0,
            appliances: Vec::new(),
            fold: 0,
            epoch: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: ConvNilm,
    pub meta: CheckpointMeta,
}

fn norm_code(n: NormKind) -> u8 {
    match n {
        NormKind::Global => 0,
        NormKind::Cumulative => 1,
        NormKind::Affine => 2,
    }
}

fn act_code(a: HiddenActivation) -> u8 {
    match a {
        HiddenActivation::LeakyRelu => 0,
        HiddenActivation::Relu => 1,
    }
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn new(model: ConvNilm, meta: CheckpointMeta) -> Self {
        Self { model, meta }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = self.model.config();
        let mut w = Writer::new();
        w.bytes(CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_VERSION);
        for v in [
            cfg.n_filters,
            cfg.filter_len,
            cfg.stride,
            cfg.bottleneck,
            cfg.hidden,
            cfg.kernel,
            cfg.blocks,
            cfg.repeats,
            cfg.appliances,
        ] {
            w.u32(v as u32);
        }
        w.u8(cfg.causal as u8);
        w.u8(cfg.glu as u8);
        w.u8(norm_code(cfg.norm));
        w.u8(act_code(cfg.hidden_activation));
        w.f64(cfg.leaky_slope);

        match self.meta.scale {
            Some(s) => {
                w.u8(1);
                w.f64(s.min);
                w.f64(s.max);
            }
            None => w.u8(0),
        }
        w.f64(self.meta.sample_period);
        w.u32(self.meta.fold);
        w.u32(self.meta.epoch);
        w.u32(self.meta.appliances.len() as u32);
        for name in &self.meta.appliances {
            w.str(name);
        }

        let params = self.model.params();
        w.u32(params.len() as u32);
        for (name, t) in params.iter() {
            w.str(name);
            w.u32(t.rank() as u32);
            for &d in t.shape() {
                w.u64(d as u64);
            }
            w.f64s(t.data());
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader::new(bytes);
        let magic = r.take(4).map_err(|_| bad("file too short for magic bytes"))?;
        if magic != CHECKPOINT_MAGIC {
            return Err(bad(format!("bad magic bytes {magic:?}, expected \"CNN1\"")));
        }
        let version = r.u32().map_err(bad)?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let mut dims = [0usize; 9];
        for d in &mut dims {
            *d = r.u32().map_err(bad)? as usize;
        }
        let causal = r.u8().map_err(bad)? != 0;
        let glu = r.u8().map_err(bad)? != 0;
        let norm = match r.u8().map_err(bad)? {
            0 => NormKind::Global,
            1 => NormKind::Cumulative,
            2 => NormKind::Affine,
            c => return Err(bad(format!("unknown norm code {c}"))),
        };
        let hidden_activation = match r.u8().map_err(bad)? {
            0 => HiddenActivation::LeakyRelu,
            1 => HiddenActivation::Relu,
            c => return Err(bad(format!("unknown activation code {c}"))),
        };
        let leaky_slope = r.f64().map_err(bad)?;
        let [n_filters, filter_len, stride, bottleneck, hidden, kernel, blocks, repeats, appliances] =
            dims;
        let config = ModelConfig {
            n_filters,
            filter_len,
            stride,
            bottleneck,
            hidden,
            kernel,
            blocks,
            repeats,
            appliances,
            causal,
            glu,
            leaky_slope,
            hidden_activation,
            norm,
        };

        let scale = match r.u8().map_err(bad)? {
            0 => None,
            _ => Some(MinMaxScale {
                min: r.f64().map_err(bad)?,
                max: r.f64().map_err(bad)?,
            }),
        };
        let sample_period = r.f64().map_err(bad)?;
        let fold = r.u32().map_err(bad)?;
        let epoch = r.u32().map_err(bad)?;
        let n_names = r.u32().map_err(bad)? as usize;
        let appliance_names = (0..n_names)
            .map(|_| r.str().map_err(bad))
            .collect::<Result<Vec<_>, _>>()?;

        let count = r.u32().map_err(bad)? as usize;
        let mut pairs = Vec::with_capacity(count);
        for _ in 0..count {
            let name = r.str().map_err(bad)?;
            let rank = r.u32().map_err(bad)? as usize;
            let shape = (0..rank)
                .map(|_| r.u64().map(|d| d as usize).map_err(bad))
                .collect::<Result<Vec<_>, _>>()?;
            let n: usize = shape.iter().product();
            let data = r.f64s(n).map_err(bad)?;
            let t = Tensor::new(shape, data).map_err(|e| bad(format!("{name}: {e}")))?;
            pairs.push((name, t));
        }
        if !r.is_done() {
            return Err(bad("trailing bytes after parameters"));
        }
        let model = ConvNilm::from_parts(config, ParamStore::from_pairs(pairs))?;
        Ok(Self {
            model,
            meta: CheckpointMeta {
                scale,
                sample_period,
                appliances: appliance_names,
                fold,
                epoch,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_bytes())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;

    fn sample() -> Checkpoint {
        let cfg = ModelConfig {
            n_filters: 4,
            filter_len: 8,
            stride: 4,
            bottleneck: 2,
            hidden: 3,
            kernel: 3,
            blocks: 2,
            repeats: 1,
            ..ModelConfig::standard(Variant::CausalGlu, 2)
        };
        Checkpoint::new(
            ConvNilm::new(cfg, 11).unwrap(),
            CheckpointMeta {
                scale: Some(MinMaxScale { min: 0.5, max: 900.0 }),
                sample_period: 6.0,
                appliances: vec!["fridge".into(), "kettle".into()],
                fold: 1,
                epoch: 42,
            },
        )
    }

    #[test]
    fn bytes_round_trip() {
        let c = sample();
        let bytes = c.to_bytes();
        assert_eq!(&bytes[..4], b"CNN1");
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(ModelError::Checkpoint(_))));
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(Checkpoint::from_bytes(b"CN").is_err());
    }
}
