use serde::{Deserialize, Serialize};

use crate::error::TrainError;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 0.01,
        }
    }
}

/// First and second moments for each parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &[Tensor]) -> Self {
        let zeros = || params.iter().map(|p| vec![0.0; p.numel()]).collect::<Vec<_>>();
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Nothing is modified when any gradient
/// entry is non-finite.
pub fn adam_step(
    params: &mut [Tensor],
    grads: &[Vec<f64>],
    names: &[String],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<(), TrainError> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(TrainError::Setup(format!(
            "{} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if !(cfg.lr >= 0.0) {
        return Err(TrainError::Setup(format!("learning rate {} must be >= 0", cfg.lr)));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.numel() != g.len() {
            return Err(TrainError::Setup(format!(
                "gradient {i} has {} entries for {} parameters",
                g.len(),
                p.numel()
            )));
        }
        if g.iter().any(|x| !x.is_finite()) {
            let name = names.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
            return Err(TrainError::NonFiniteGradient(name));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for (k, x) in p.data_mut().iter_mut().enumerate() {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            *x -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Vec<f64>], max_norm: f64) -> f64 {
    let norm = grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(p: f64) -> (Vec<Tensor>, AdamState) {
        let params = vec![Tensor::new([1], vec![p]).unwrap()];
        let state = AdamState::new(&params);
        (params, state)
    }

    #[test]
    fn first_step_hand_value() {
        let (mut p, mut s) = one(0.0);
        adam_step(&mut p, &[vec![1.0]], &[], &mut s, &AdamConfig::default()).unwrap();
        let expected = -0.01 / 1.01;
        assert!((p[0].data()[0] - expected).abs() < 1e-15);
        assert!((p[0].data()[0] + 0.009901).abs() < 1e-6);
    }

    #[test]
    fn zero_gradient_and_zero_lr_leave_params() {
        let (mut p, mut s) = one(0.3);
        adam_step(&mut p, &[vec![0.0]], &[], &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p[0].data()[0], 0.3);
        let cfg = AdamConfig {
            lr: 0.0,
            ..AdamConfig::default()
        };
        adam_step(&mut p, &[vec![5.0]], &[], &mut s, &cfg).unwrap();
        assert_eq!(p[0].data()[0].to_bits(), 0.3f64.to_bits());
    }

    #[test]
    fn constant_gradient_gives_constant_steps() {
        // With bias correction m_hat = g and v_hat = g^2 at every step, so the
        // step size stays lr * |g| / (|g| + eps).
        let (mut p, mut s) = one(0.0);
        let cfg = AdamConfig::default();
        let mut prev = 0.0;
        for _ in 0..5 {
            adam_step(&mut p, &[vec![2.0]], &[], &mut s, &cfg).unwrap();
            let now = p[0].data()[0];
            assert!(((prev - now) - 0.01 * 2.0 / 2.01).abs() < 1e-15);
            prev = now;
        }
    }

    #[test]
    fn non_finite_gradient_is_rejected_untouched() {
        let (mut p, mut s) = one(1.0);
        let err = adam_step(&mut p, &[vec![f64::NAN]], &["w".into()], &mut s, &AdamConfig::default());
        assert!(matches!(err, Err(TrainError::NonFiniteGradient(ref n)) if n == "w"));
        assert_eq!(p[0].data()[0], 1.0);
        assert_eq!(s.step, 0);
    }

    #[test]
    fn clipping() {
        let mut g = vec![vec![3.0], vec![4.0]];
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g[0][0] - 0.6).abs() < 1e-15 && (g[1][0] - 0.8).abs() < 1e-15);
    }
}
