use super::net::ConvNilm;
use crate::error::ModelError;
use crate::tensor::Tensor;

/// Chunked inference for causal models, bit-identical to
/// [`ConvNilm::predict`] on the whole signal.
///
/// Output is produced `chunk` samples at a time (rounded up to whole hops).
/// Each chunk re-encodes enough preceding frames to cover the separator's
/// receptive field, so every emitted sample sees exactly the inputs and the
/// summation order of the whole-signal pass.
pub fn stream_predict(model: &ConvNilm, mixture: &[f64], chunk: usize) -> Result<Tensor, ModelError> {
    let cfg = model.config();
    if !cfg.supports_streaming() {
        return Err(ModelError::NotStreamable);
    }
    let (l, s, c) = (cfg.filter_len, cfg.stride, cfg.appliances);
    let t = mixture.len();
    if t < l {
        return Err(ModelError::TooShort { len: t, frame: l });
    }
    let rf = model.receptive_field().frames;
    let chunk = chunk.max(1).div_ceil(s) * s;
    let mut out = vec![0.0; c * t];

    let mut start = 0;
    while start < t {
        let end = (start + chunk).min(t);
        // First frame overlapping `start`, last frame beginning before `end`.
        let first = if start < l { 0 } else { (start - l) / s + 1 };
        let last = (end - 1) / s;
        let context = first.saturating_sub(rf - 1);
        let from = context * s;
        let to = (last * s + l).min(t);
        let pred = model.predict_padded(&mixture[from..to])?;
        let width = to - from;
        for ch in 0..c {
            let row = &pred.data()[ch * width..(ch + 1) * width];
            out[ch * t + start..ch * t + end].copy_from_slice(&row[start - from..end - from]);
        }
        start = end;
    }
    Ok(Tensor::new([c, t], out)?)
}
