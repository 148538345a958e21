use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::TensorError;
use crate::tensor::Tensor;

/// Training objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// Squared error summed over appliances, averaged over time.
    #[default]
    Wmse,
    /// Squared error averaged over appliances and time.
    MseMean,
}

impl std::str::FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wmse" => Ok(LossKind::Wmse),
            "mse-mean" => Ok(LossKind::MseMean),
            other => Err(format!("unknown loss {other:?} (expected wmse or mse-mean)")),
        }
    }
}

fn squared_error(tape: &mut Tape, pred: Var, target: Var) -> Result<Var, TensorError> {
    let (p, t) = (tape.shape(pred), tape.shape(target));
    if p.len() != 2 || p != t {
        return Err(TensorError::ShapeMismatch {
            op: "loss",
            lhs: p.to_vec(),
            rhs: t.to_vec(),
        });
    }
    let d = tape.sub(pred, target)?;
    tape.square(d)
}

/// `(1/T) sum_t sum_i (pred_i(t) - target_i(t))^2` for `[C, T]` inputs.
pub fn wmse(tape: &mut Tape, pred: Var, target: Var) -> Result<Var, TensorError> {
    let sq = squared_error(tape, pred, target)?;
    let t = tape.shape(sq)[1];
    let total = tape.sum_all(sq)?;
    tape.mul_scalar(total, 1.0 / t as f64)
}

/// Mean of the squared error over appliances and time.
pub fn mse_mean(tape: &mut Tape, pred: Var, target: Var) -> Result<Var, TensorError> {
    let sq = squared_error(tape, pred, target)?;
    tape.mean_all(sq)
}

pub fn loss(tape: &mut Tape, kind: LossKind, pred: Var, target: Var) -> Result<Var, TensorError> {
    match kind {
        LossKind::Wmse => wmse(tape, pred, target),
        LossKind::MseMean => mse_mean(tape, pred, target),
    }
}

/// WMSE of plain tensors, for logging.
pub fn wmse_value(pred: &Tensor, target: &Tensor) -> Result<f64, TensorError> {
    if pred.rank() != 2 || pred.shape() != target.shape() {
        return Err(TensorError::ShapeMismatch {
            op: "wmse",
            lhs: pred.shape().to_vec(),
            rhs: target.shape().to_vec(),
        });
    }
    let t = pred.shape()[1] as f64;
    Ok(pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_value() {
        let mut tape = Tape::new();
        let p = tape.constant(Tensor::new([2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let y = tape.constant(Tensor::new([2, 2], vec![1.0, 1.0, 3.0, 3.0]).unwrap());
        let w = wmse(&mut tape, p, y).unwrap();
        assert_eq!(tape.value(w).item(), 1.0);
        let m = mse_mean(&mut tape, p, y).unwrap();
        assert_eq!(tape.value(m).item(), 0.5);
        let same = wmse(&mut tape, p, p).unwrap();
        assert_eq!(tape.value(same).item(), 0.0);
        assert_eq!(
            wmse_value(tape.value(p), tape.value(y)).unwrap(),
            tape.value(w).item()
        );
    }

    #[test]
    fn shape_mismatch() {
        let mut tape = Tape::new();
        let p = tape.constant(Tensor::zeros([2, 3]));
        let y = tape.constant(Tensor::zeros([3, 2]));
        assert!(wmse(&mut tape, p, y).is_err());
    }
}
