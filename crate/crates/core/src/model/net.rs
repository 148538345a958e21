use super::config::{HiddenActivation, ModelConfig, NormKind};
use super::params::{BoundParams, ParamStore};
use super::receptive::{receptive_field, ReceptiveField};
use crate::autodiff::{Precision, Tape, Var};
use crate::error::ModelError;
use crate::nn::{self, Conv1dSpec, NormMode};
use crate::tensor::Tensor;

fn hidden_act(tape: &mut Tape, cfg: &ModelConfig, x: Var) -> Result<Var, ModelError> {
    Ok(match cfg.hidden_activation {
        HiddenActivation::LeakyRelu => nn::leaky_relu(tape, x, cfg.leaky_slope)?,
        HiddenActivation::Relu => nn::relu(tape, x)?,
    })
}

fn norm(
    tape: &mut Tape,
    p: &BoundParams,
    cfg: &ModelConfig,
    name: &str,
    x: Var,
) -> Result<Var, ModelError> {
    let gain = p.get(&format!("{name}.gain"));
    let bias = p.get(&format!("{name}.bias"));
    Ok(match cfg.norm {
        NormKind::Global => nn::channel_norm(tape, x, NormMode::Global, Some(gain), Some(bias))?,
        NormKind::Cumulative => {
            nn::channel_norm(tape, x, NormMode::Cumulative, Some(gain), Some(bias))?
        }
        NormKind::Affine => {
            let scaled = tape.mul(x, gain)?;
            tape.add(scaled, bias)?
        }
    })
}

fn pointwise(
    tape: &mut Tape,
    p: &BoundParams,
    name: &str,
    x: Var,
    cin: usize,
    cout: usize,
) -> Result<Var, ModelError> {
    let spec = Conv1dSpec::pointwise(cin, cout);
    let w = p.get(&format!("{name}.weight"));
    let b = p.get(&format!("{name}.bias"));
    Ok(nn::conv1d(tape, x, w, Some(b), &spec)?)
}

/// Frames the mixture `[1, T]` into `K = floor((T - L) / S) + 1` windows and
/// maps them to the latent `[N, K]` through the encoder filters and a
/// leaky ReLU.
pub fn encode(
    tape: &mut Tape,
    p: &BoundParams,
    cfg: &ModelConfig,
    mixture: Var,
) -> Result<Var, ModelError> {
    let shape = tape.shape(mixture);
    let t = shape.get(1).copied().unwrap_or(0);
    if shape.len() != 2 || shape[0] != 1 {
        return Err(ModelError::Config(format!("mixture must be [1, T], got {shape:?}")));
    }
    if t < cfg.filter_len {
        return Err(ModelError::TooShort {
            len: t,
            frame: cfg.filter_len,
        });
    }
    let spec = Conv1dSpec::new(1, cfg.n_filters, cfg.filter_len).with_stride(cfg.stride);
    let z = nn::conv1d(
        tape,
        mixture,
        p.get("encoder.weight"),
        Some(p.get("encoder.bias")),
        &spec,
    )?;
    hidden_act(tape, cfg, z)
}

/// Estimates one non-negative mask per appliance over the latent, `[C, N, K]`.
///
/// Masks are not normalised across appliances.
pub fn separate(
    tape: &mut Tape,
    p: &BoundParams,
    cfg: &ModelConfig,
    z: Var,
) -> Result<Var, ModelError> {
    let (n, b, h) = (cfg.n_filters, cfg.bottleneck, cfg.hidden);
    let k = tape.shape(z)[1];
    let x = norm(tape, p, cfg, "separator.input_norm", z)?;
    let mut x = pointwise(tape, p, "separator.bottleneck", x, n, b)?;
    let total = cfg.blocks * cfg.repeats;
    let mut skips: Option<Var> = None;
    for i in 0..total {
        let pre = format!("separator.blocks.{i}");
        let dilation = cfg.dilation(i % cfg.blocks);

        let value = pointwise(tape, p, &format!("{pre}.conv_in"), x, b, h)?;
        let y = if cfg.glu {
            let gate = pointwise(tape, p, &format!("{pre}.gate_in"), x, b, h)?;
            nn::glu(tape, value, gate)?
        } else {
            hidden_act(tape, cfg, value)?
        };
        let y = norm(tape, p, cfg, &format!("{pre}.norm_in"), y)?;

        let dw = Conv1dSpec::depthwise(h, cfg.kernel, dilation, cfg.depthwise_padding());
        let value = nn::conv1d(tape, y, p.get(&format!("{pre}.depthwise.weight")), None, &dw)?;
        let y = if cfg.glu {
            let gate = nn::conv1d(
                tape,
                y,
                p.get(&format!("{pre}.depthwise_gate.weight")),
                None,
                &dw,
            )?;
            nn::glu(tape, value, gate)?
        } else {
            hidden_act(tape, cfg, value)?
        };
        let y = norm(tape, p, cfg, &format!("{pre}.norm_out"), y)?;

        let skip = pointwise(tape, p, &format!("{pre}.skip"), y, h, b)?;
        skips = Some(match skips {
            Some(acc) => tape.add(acc, skip)?,
            None => skip,
        });
        if i + 1 < total {
            let res = pointwise(tape, p, &format!("{pre}.residual"), y, h, b)?;
            x = tape.add(x, res)?;
        }
    }
    let s = skips.expect("at least one block");
    let s = hidden_act(tape, cfg, s)?;
    let m = pointwise(tape, p, "separator.mask", s, b, cfg.appliances * n)?;
    let m = nn::relu(tape, m)?;
    Ok(tape.reshape(m, &[cfg.appliances, n, k])?)
}

/// `S[i] = Z ⊙ masks[i]`.
pub fn apply_masks(tape: &mut Tape, z: Var, masks: Var) -> Result<Var, ModelError> {
    let (zs, ms) = (tape.shape(z), tape.shape(masks));
    if ms.len() != 3 || zs != &ms[1..] {
        return Err(ModelError::Config(format!(
            "masks {ms:?} do not match latent {zs:?}"
        )));
    }
    Ok(tape.mul(masks, z)?)
}

/// Overlap-adds each appliance's latent `[C, N, K]` through the shared
/// decoder filters into `[C, (K - 1) * S + L]`.
pub fn decode(
    tape: &mut Tape,
    p: &BoundParams,
    cfg: &ModelConfig,
    sources: Var,
) -> Result<Var, ModelError> {
    Ok(nn::transposed_conv1d(
        tape,
        sources,
        p.get("decoder.weight"),
        cfg.stride,
    )?)
}

/// Intermediate handles of one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct ForwardParts {
    pub latent: Var,
    pub masks: Var,
    pub sources: Var,
    /// `[C, T]` predictions cropped to the input length.
    pub output: Var,
}

/// A configured network with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvNilm {
    config: ModelConfig,
    params: ParamStore,
}

impl ConvNilm {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let params = ParamStore::init(&config, seed);
        Ok(Self { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: ParamStore) -> Result<Self, ModelError> {
        config.validate()?;
        params.check_layout(&config)?;
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore {
        self.params
    }

    pub fn receptive_field(&self) -> ReceptiveField {
        receptive_field(&self.config)
    }

    pub fn bind<'a>(&'a self, tape: &mut Tape, trainable: bool) -> BoundParams<'a> {
        self.params.bind(tape, trainable)
    }

    /// encode → separate → apply_masks → decode on a mixture of `T >= L`
    /// samples. The mixture is zero-padded on the right to a whole number
    /// of hops and the output cropped back to `[C, T]`. No clamping is
    /// applied to the decoder output.
    pub fn forward_parts(
        &self,
        tape: &mut Tape,
        p: &BoundParams,
        mixture: &[f64],
    ) -> Result<ForwardParts, ModelError> {
        let cfg = &self.config;
        let t = mixture.len();
        if t < cfg.filter_len {
            return Err(ModelError::TooShort {
                len: t,
                frame: cfg.filter_len,
            });
        }
        self.forward_padded(tape, p, mixture)
    }

    /// Like [`forward_parts`](Self::forward_parts) but also accepts inputs
    /// shorter than one frame by zero-padding them.
    pub(crate) fn forward_padded(
        &self,
        tape: &mut Tape,
        p: &BoundParams,
        mixture: &[f64],
    ) -> Result<ForwardParts, ModelError> {
        let cfg = &self.config;
        let t = mixture.len();
        let (l, s) = (cfg.filter_len, cfg.stride);
        let padded_len = if t <= l { l } else { l + (t - l).div_ceil(s) * s };
        let mut data = mixture.to_vec();
        data.resize(padded_len, 0.0);
        let x = tape.constant(Tensor::new([1, padded_len], data)?);
        let latent = encode(tape, p, cfg, x)?;
        let masks = separate(tape, p, cfg, latent)?;
        let sources = apply_masks(tape, latent, masks)?;
        let decoded = decode(tape, p, cfg, sources)?;
        let output = if padded_len == t {
            decoded
        } else {
            tape.narrow(decoded, 1, 0, t)?
        };
        Ok(ForwardParts {
            latent,
            masks,
            sources,
            output,
        })
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        p: &BoundParams,
        mixture: &[f64],
    ) -> Result<Var, ModelError> {
        Ok(self.forward_parts(tape, p, mixture)?.output)
    }

    /// Inference on a scaled mixture, `[C, T]`.
    pub fn predict(&self, mixture: &[f64]) -> Result<Tensor, ModelError> {
        self.predict_with(mixture, Precision::F64)
    }

    pub fn predict_with(&self, mixture: &[f64], precision: Precision) -> Result<Tensor, ModelError> {
        let mut tape = Tape::with_precision(precision);
        let p = self.bind(&mut tape, false);
        let out = self.forward(&mut tape, &p, mixture)?;
        Ok(tape.value(out).clone())
    }

    pub(crate) fn predict_padded(&self, mixture: &[f64]) -> Result<Tensor, ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape, false);
        let out = self.forward_padded(&mut tape, &p, mixture)?.output;
        Ok(tape.value(out).clone())
    }
}
