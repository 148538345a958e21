use super::config::ModelConfig;

/// Receptive-field figures for a configuration.
///
/// `frames`/`samples` describe the implemented separator stack: `R` repeats
/// of `X` depthwise layers with kernel `P` and dilations `1, 2, .., 2^(X-1)`,
/// i.e. `1 + R (P - 1) (2^X - 1)` frames. The closed form `2^l (K - 1)` with
/// `l = X R` layers is reported in two readings of `K`: the block kernel
/// size `P` (in frames) and the encoder filter length `L` (in samples). It
/// assumes dilation keeps doubling across repeats and therefore
/// overestimates the implemented stack whenever `R > 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReceptiveField {
    /// Separator span in latent frames, including the current frame.
    pub frames: usize,
    /// End-to-end span in samples: `(frames - 1) * S + L`.
    pub samples: usize,
    /// `2^(X R) (P - 1)`.
    pub formula_frames: usize,
    /// `formula_frames * S + L`, the closed form converted to samples.
    pub formula_samples: usize,
    /// `2^(X R) (L - 1)`.
    pub formula_encoder_reading: usize,
}

impl ReceptiveField {
    pub fn seconds(&self, sample_period: f64) -> f64 {
        self.samples as f64 * sample_period
    }
}

pub fn receptive_field(cfg: &ModelConfig) -> ReceptiveField {
    let layers = (cfg.blocks * cfg.repeats) as u32;
    let per_repeat: usize = (0..cfg.blocks).map(|x| (cfg.kernel - 1) * cfg.dilation(x)).sum();
    let frames = 1 + cfg.repeats * per_repeat;
    let pow = 1usize << layers;
    let formula_frames = pow * (cfg.kernel - 1);
    ReceptiveField {
        frames,
        samples: (frames - 1) * cfg.stride + cfg.filter_len,
        formula_frames,
        formula_samples: formula_frames * cfg.stride + cfg.filter_len,
        formula_encoder_reading: pow * (cfg.filter_len - 1),
    }
}
