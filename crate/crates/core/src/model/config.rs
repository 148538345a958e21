use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::nn::Padding;

/// The three network variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Base,
    Causal,
    CausalGlu,
}

impl FromStr for Variant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(Self::Base),
            "causal" => Ok(Self::Causal),
            "causal-glu" => Ok(Self::CausalGlu),
            other => Err(ModelError::Config(format!(
                "unknown variant {other:?} (expected base, causal or causal-glu)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Base => "base",
            Self::Causal => "causal",
            Self::CausalGlu => "causal-glu",
        })
    }
}

/// Normalization inside the separator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Mean/variance over the whole window. Non-causal.
    Global,
    /// Running statistics over all past frames. Causal but with unbounded
    /// memory, so it defeats the finite receptive field and streaming.
    Cumulative,
    /// Learned per-channel gain and bias only. Frame-local.
    Affine,
}

/// Non-linearity used everywhere except the mask head, which is always ReLU.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HiddenActivation {
    LeakyRelu,
    Relu,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Encoder/decoder filter count (N).
    pub n_filters: usize,
    /// Encoder/decoder filter length in samples (L).
    pub filter_len: usize,
    /// Encoder hop in samples (S).
    pub stride: usize,
    /// Bottleneck channels (B).
    pub bottleneck: usize,
    /// Channels inside each separator block (H).
    pub hidden: usize,
    /// Depthwise kernel size inside each block (P).
    pub kernel: usize,
    /// Blocks per repeat (X); block `x` uses dilation `2^x`.
    pub blocks: usize,
    /// Repeats (R).
    pub repeats: usize,
    /// Number of appliances separated (C).
    pub appliances: usize,
    pub causal: bool,
    pub glu: bool,
    pub leaky_slope: f64,
    pub hidden_activation: HiddenActivation,
    pub norm: NormKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::standard(Variant::Base, 5)
    }
}

impl ModelConfig {
    /// N=32, L=48, B=2, H=P=X=3, R=2 with a half-overlap hop S=24.
    pub fn standard(variant: Variant, appliances: usize) -> Self {
        let mut cfg = Self {
            n_filters: 32,
            filter_len: 48,
            stride: 24,
            bottleneck: 2,
            hidden: 3,
            kernel: 3,
            blocks: 3,
            repeats: 2,
            appliances,
            causal: false,
            glu: false,
            leaky_slope: 0.01,
            hidden_activation: HiddenActivation::LeakyRelu,
            norm: NormKind::Global,
        };
        cfg.set_variant(variant);
        cfg
    }

    /// Sets the causal/GLU flags and the matching normalization.
    pub fn set_variant(&mut self, variant: Variant) {
        let (causal, glu) = match variant {
            Variant::Base => (false, false),
            Variant::Causal => (true, false),
            Variant::CausalGlu => (true, true),
        };
        self.causal = causal;
        self.glu = glu;
        self.norm = if causal {
            NormKind::Affine
        } else {
            NormKind::Global
        };
    }

    pub fn variant(&self) -> Variant {
        match (self.causal, self.glu) {
            (false, _) => Variant::Base,
            (true, false) => Variant::Causal,
            (true, true) => Variant::CausalGlu,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let counts = [
            ("n_filters", self.n_filters),
            ("filter_len", self.filter_len),
            ("stride", self.stride),
            ("bottleneck", self.bottleneck),
            ("hidden", self.hidden),
            ("kernel", self.kernel),
            ("blocks", self.blocks),
            ("repeats", self.repeats),
            ("appliances", self.appliances),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.stride > self.filter_len {
            return Err(ModelError::Config(format!(
                "stride {} exceeds filter length {}",
                self.stride, self.filter_len
            )));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(ModelError::Config(format!(
                "leaky_slope {} outside (0, 1)",
                self.leaky_slope
            )));
        }
        if self.blocks > 30 {
            return Err(ModelError::Config("blocks > 30 overflows the dilation".into()));
        }
        if self.causal && self.norm == NormKind::Global {
            return Err(ModelError::Config(
                "global normalization looks at future frames; use affine or cumulative with causal"
                    .into(),
            ));
        }
        Ok(())
    }

    pub fn dilation(&self, block: usize) -> usize {
        1 << block
    }

    pub fn depthwise_padding(&self) -> Padding {
        if self.causal {
            Padding::CausalLeft
        } else {
            Padding::SameSymmetric
        }
    }

    /// Number of encoder frames for a window of `t` samples.
    pub fn frames(&self, t: usize) -> Option<usize> {
        (t >= self.filter_len).then(|| (t - self.filter_len) / self.stride + 1)
    }

    /// Window length reconstructed by the decoder from `k` frames.
    pub fn decoded_len(&self, k: usize) -> usize {
        (k - 1) * self.stride + self.filter_len
    }

    /// Whether chunked inference reproduces whole-signal inference.
    pub fn supports_streaming(&self) -> bool {
        self.causal && self.norm == NormKind::Affine
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_defaults() {
        let c = ModelConfig::standard(Variant::Base, 5);
        assert_eq!(
            (c.n_filters, c.filter_len, c.bottleneck, c.hidden, c.kernel, c.blocks, c.repeats),
            (32, 48, 2, 3, 3, 3, 2)
        );
        assert_eq!(c.stride, 24);
        c.validate().unwrap();
        assert_eq!(c.frames(96), Some(3));
        assert_eq!(c.frames(48), Some(1));
        assert_eq!(c.frames(47), None);
    }

    #[test]
    fn variants_toggle_flags() {
        let c = ModelConfig::standard(Variant::Causal, 5);
        assert!(c.causal && !c.glu && c.norm == NormKind::Affine);
        assert_eq!(c.depthwise_padding(), Padding::CausalLeft);
        let g = ModelConfig::standard("causal-glu".parse().unwrap(), 5);
        assert!(g.causal && g.glu);
        assert_eq!(g.variant(), Variant::CausalGlu);
        assert!("bogus".parse::<Variant>().is_err());
    }

    #[test]
    fn rejects_invalid() {
        let mut c = ModelConfig::default();
        c.stride = 49;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.hidden = 0;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::standard(Variant::Causal, 2);
        c.norm = NormKind::Global;
        assert!(c.validate().is_err());
    }
}
