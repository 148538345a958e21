use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, UnaryKind, Var};
use crate::error::TensorError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Sigmoid,
}

pub fn activation(tape: &mut Tape, kind: Activation, x: Var) -> Result<Var, TensorError> {
    match kind {
        Activation::Relu => relu(tape, x),
        Activation::LeakyRelu(slope) => leaky_relu(tape, x, slope),
        Activation::Sigmoid => sigmoid(tape, x),
    }
}

pub fn relu(tape: &mut Tape, x: Var) -> Result<Var, TensorError> {
    tape.unary(UnaryKind::Relu, x)
}

/// `x` for `x >= 0`, `slope * x` otherwise. `slope` must lie in (0, 1).
pub fn leaky_relu(tape: &mut Tape, x: Var, slope: f64) -> Result<Var, TensorError> {
    if !(slope > 0.0 && slope < 1.0) {
        return Err(TensorError::InvalidArgument {
            op: "leaky_relu",
            msg: format!("slope {slope} outside (0, 1)"),
        });
    }
    tape.unary(UnaryKind::LeakyRelu(slope), x)
}

pub fn sigmoid(tape: &mut Tape, x: Var) -> Result<Var, TensorError> {
    tape.unary(UnaryKind::Sigmoid, x)
}

/// Parametric ReLU `max(0, x) + alpha * min(0, x)` with `alpha` broadcast
/// onto `x` (a scalar or one slope per channel as `[C, 1]`).
pub fn prelu(tape: &mut Tape, x: Var, alpha: Var) -> Result<Var, TensorError> {
    let pos = tape.unary(UnaryKind::Relu, x)?;
    let flipped = tape.neg(x)?;
    let neg_part = tape.unary(UnaryKind::Relu, flipped)?;
    let neg_part = tape.neg(neg_part)?;
    let scaled = tape.mul(neg_part, alpha)?;
    tape.add(pos, scaled)
}

/// Gated linear unit `a * sigmoid(b)`.
pub fn glu(tape: &mut Tape, a: Var, b: Var) -> Result<Var, TensorError> {
    if tape.shape(a) != tape.shape(b) {
        return Err(TensorError::ShapeMismatch {
            op: "glu",
            lhs: tape.shape(a).to_vec(),
            rhs: tape.shape(b).to_vec(),
        });
    }
    let gate = sigmoid(tape, b)?;
    tape.mul(a, gate)
}
