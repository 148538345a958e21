use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::TensorError;
use crate::tensor::Tensor;

/// Added to the variance before the square root.
pub const NORM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    /// Statistics over every (channel, time) element.
    Global,
    /// Position `t` uses statistics over all channels and positions `<= t`.
    Cumulative,
}

/// Normalizes `x: [C, T]` to zero mean and unit variance, then applies the
/// optional per-channel `gain` and `bias` (each `[C, 1]`).
pub fn channel_norm(
    tape: &mut Tape,
    x: Var,
    mode: NormMode,
    gain: Option<Var>,
    bias: Option<Var>,
) -> Result<Var, TensorError> {
    let shape = tape.shape(x).to_vec();
    let [c, t] = shape[..] else {
        return Err(TensorError::ShapeMismatch {
            op: "channel_norm",
            lhs: shape,
            rhs: vec![],
        });
    };
    let normed = match mode {
        NormMode::Global => {
            let mu = tape.mean_all(x)?;
            let centered = tape.sub(x, mu)?;
            let sq = tape.square(centered)?;
            let var = tape.mean_all(sq)?;
            let var = tape.add_scalar(var, NORM_EPS)?;
            let std = tape.sqrt(var)?;
            tape.div(centered, std)?
        }
        NormMode::Cumulative => {
            let counts: Vec<f64> = (1..=t).map(|k| (k * c) as f64).collect();
            let counts = tape.constant(Tensor::from_vec(counts));
            let col = tape.sum(x, &[0])?;
            let run = tape.cumsum(col, 0)?;
            let mu = tape.div(run, counts)?;
            let sq = tape.square(x)?;
            let col_sq = tape.sum(sq, &[0])?;
            let run_sq = tape.cumsum(col_sq, 0)?;
            let ex2 = tape.div(run_sq, counts)?;
            let mu2 = tape.square(mu)?;
            let var = tape.sub(ex2, mu2)?;
            let var = tape.add_scalar(var, NORM_EPS)?;
            let std = tape.sqrt(var)?;
            let centered = tape.sub(x, mu)?;
            tape.div(centered, std)?
        }
    };
    let scaled = match gain {
        Some(g) => tape.mul(normed, g)?,
        None => normed,
    };
    match bias {
        Some(b) => tape.add(scaled, b),
        None => Ok(scaled),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(x: &Tensor, mode: NormMode) -> Tensor {
        let mut tape = Tape::new();
        let v = tape.constant(x.clone());
        let y = channel_norm(&mut tape, v, mode, None, None).unwrap();
        tape.value(y).clone()
    }

    #[test]
    fn constant_input_maps_to_zero() {
        let x = Tensor::full([3, 5], 2.5);
        for mode in [NormMode::Global, NormMode::Cumulative] {
            assert!(norm(&x, mode).data().iter().all(|v| v.abs() < 1e-6), "{mode:?}");
        }
    }

    #[test]
    fn global_has_zero_mean_unit_variance() {
        let x = Tensor::new([2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 9.0]).unwrap();
        let y = norm(&x, NormMode::Global);
        let n = y.numel() as f64;
        let mean: f64 = y.data().iter().sum::<f64>() / n;
        let var: f64 = y.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cumulative_first_frame_uses_only_itself() {
        let x = Tensor::new([3, 2], vec![1.0, 10.0, 2.0, -7.0, 6.0, 0.5]).unwrap();
        let y = norm(&x, NormMode::Cumulative);
        let first = [1.0, 2.0, 6.0];
        let mu = first.iter().sum::<f64>() / 3.0;
        let var = first.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 3.0;
        for (ch, v) in first.iter().enumerate() {
            let expect = (v - mu) / (var + NORM_EPS).sqrt();
            assert!((y.get(&[ch, 0]) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulative_ignores_the_future() {
        let base: Vec<f64> = (0..24).map(|i| ((i * 7 % 11) as f64).sin()).collect();
        let x = Tensor::new([3, 8], base.clone()).unwrap();
        let y = norm(&x, NormMode::Cumulative);
        let cut = 4;
        let mut alt = base;
        for ch in 0..3 {
            for t in cut + 1..8 {
                alt[ch * 8 + t] += 3.0 * (t as f64);
            }
        }
        let y2 = norm(&Tensor::new([3, 8], alt).unwrap(), NormMode::Cumulative);
        for ch in 0..3 {
            for t in 0..=cut {
                assert_eq!(y.get(&[ch, t]), y2.get(&[ch, t]));
            }
        }
    }

    #[test]
    fn affine_parameters_apply_per_channel() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new([2, 2], vec![0.0, 2.0, 0.0, 2.0]).unwrap());
        let g = tape.constant(Tensor::new([2, 1], vec![2.0, 1.0]).unwrap());
        let b = tape.constant(Tensor::new([2, 1], vec![0.0, 5.0]).unwrap());
        let y = channel_norm(&mut tape, x, NormMode::Global, Some(g), Some(b)).unwrap();
        let d = tape.value(y).data();
        assert!((d[0] + 2.0).abs() < 1e-6 && (d[1] - 2.0).abs() < 1e-6);
        assert!((d[2] - 4.0).abs() < 1e-6 && (d[3] - 6.0).abs() < 1e-6);
    }
}
