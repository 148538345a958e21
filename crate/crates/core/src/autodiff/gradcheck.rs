use super::tape::{Tape, Var};
use crate::error::TensorError;
use crate::tensor::Tensor;

/// `|a - b| / max(1e-12, |a| + |b|)`, maximised over coordinates.
pub fn max_relative_error(numeric: &[f64], analytic: &[f64]) -> f64 {
    numeric
        .iter()
        .zip(analytic)
        .map(|(n, a)| (n - a).abs() / (n.abs() + a.abs()).max(1e-12))
        .fold(0.0, f64::max)
}

/// Compares tape gradients of a scalar function against central finite
/// differences `(f(x + eps) - f(x - eps)) / (2 eps)` on every coordinate of
/// every input, returning the largest relative error.
///
/// `f` is rebuilt on a fresh tape for each evaluation, so it must be a pure
/// function of the leaves it is handed.
pub fn grad_check<F>(f: F, inputs: &[Tensor], eps: f64) -> Result<f64, TensorError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    if !(1e-8..=1e-4).contains(&eps) {
        return Err(TensorError::InvalidArgument {
            op: "grad_check",
            msg: format!("eps {eps} outside [1e-8, 1e-4]"),
        });
    }

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<f64> = vars
        .iter()
        .flat_map(|&v| grads.wrt(v).data().to_vec())
        .collect();

    let eval = |values: &[Tensor]| -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        let v = tape.value(out);
        if !v.is_scalar() {
            return Err(TensorError::NonScalarLoss(v.shape().to_vec()));
        }
        Ok(v.item())
    };

    let mut numeric = Vec::with_capacity(analytic.len());
    let mut work: Vec<Tensor> = inputs.to_vec();
    for which in 0..inputs.len() {
        for k in 0..inputs[which].numel() {
            let x0 = inputs[which].data()[k];
            work[which].data_mut()[k] = x0 + eps;
            let plus = eval(&work)?;
            work[which].data_mut()[k] = x0 - eps;
            let minus = eval(&work)?;
            work[which].data_mut()[k] = x0;
            let d = (plus - minus) / (2.0 * eps);
            if !d.is_finite() {
                return Err(TensorError::NonFinite { op: "grad_check" });
            }
            numeric.push(d);
        }
    }
    Ok(max_relative_error(&numeric, &analytic))
}
