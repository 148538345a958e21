use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::TensorError;
use crate::tensor::Tensor;

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// Storage precision of tape values.
///
/// `F32` rounds every stored value to the nearest single-precision number,
/// emulating 32-bit inference while keeping one code path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

/// Handle to a value recorded on a particular tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    tape: u64,
    index: usize,
}

impl Var {
    pub fn index(self) -> usize {
        self.index
    }
}

/// Vector-Jacobian product of one recorded operation.
///
/// `needs[i]` tells whether input `i` requires a gradient; entries for
/// inputs that do not may be `None`. Returned gradients have the flat
/// length of the corresponding input.
pub trait BackwardRule {
    fn backward(
        &self,
        inputs: &[&Tensor],
        output: &Tensor,
        grad: &[f64],
        needs: &[bool],
    ) -> Vec<Option<Vec<f64>>>;
}

struct Record {
    inputs: Vec<usize>,
    rule: Box<dyn BackwardRule>,
}

struct Node {
    value: Tensor,
    requires_grad: bool,
    record: Option<Record>,
}

pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
    precision: Precision,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::with_precision(Precision::F64)
    }

    pub fn with_precision(precision: Precision) -> Self {
        Self {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            precision,
        }
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds an input tensor. Leaves with `requires_grad` receive gradients.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        let value = self.round(value);
        self.push(Node {
            value,
            requires_grad,
            record: None,
        })
    }

    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        assert_eq!(v.tape, self.id, "variable belongs to a different tape");
        &self.nodes[v.index].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.index].requires_grad
    }

    pub(crate) fn check(&self, v: Var) -> Result<(), TensorError> {
        if v.tape == self.id && v.index < self.nodes.len() {
            Ok(())
        } else {
            Err(TensorError::ForeignVar)
        }
    }

    /// Records the result of an operation on `inputs`.
    ///
    /// The value is rounded to the tape precision and checked for finiteness.
    /// When no input requires a gradient the node is stored as a constant and
    /// the rule is dropped.
    pub fn record(
        &mut self,
        op: &'static str,
        inputs: &[Var],
        value: Tensor,
        rule: Box<dyn BackwardRule>,
    ) -> Result<Var, TensorError> {
        for &v in inputs {
            self.check(v)?;
        }
        let value = self.round(value);
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op });
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.index].requires_grad);
        let record = requires_grad.then(|| Record {
            inputs: inputs.iter().map(|v| v.index).collect(),
            rule,
        });
        Ok(self.push(Node {
            value,
            requires_grad,
            record,
        }))
    }

    /// Drops every recorded backward rule. Values stay readable through
    /// existing handles, but nothing on the tape is differentiable anymore.
    pub fn clear(&mut self) {
        for node in &mut self.nodes {
            node.record = None;
            node.requires_grad = false;
        }
    }

    /// Reverse pass from a scalar `loss`.
    ///
    /// Every differentiable leaf gets an entry in the result; leaves the loss
    /// does not depend on get zeros.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        self.check(loss)?;
        let loss_node = &self.nodes[loss.index];
        if !loss_node.value.is_scalar() {
            return Err(TensorError::NonScalarLoss(loss_node.value.shape().to_vec()));
        }
        if loss_node.record.is_none() {
            return Err(TensorError::DetachedLoss);
        }

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.index + 1];
        grads[loss.index] = Some(vec![1.0]);
        let mut out = HashMap::new();

        for i in (0..=loss.index).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else {
                if node.record.is_none() {
                    out.insert(i, Tensor::zeros(node.value.shape()));
                }
                continue;
            };
            match &node.record {
                None => {
                    let t = Tensor::new(node.value.shape(), g).expect("gradient shape");
                    out.insert(i, t);
                }
                Some(rec) => {
                    let inputs: Vec<&Tensor> =
                        rec.inputs.iter().map(|&j| &self.nodes[j].value).collect();
                    let needs: Vec<bool> = rec
                        .inputs
                        .iter()
                        .map(|&j| self.nodes[j].requires_grad)
                        .collect();
                    let input_grads = rec.rule.backward(&inputs, &node.value, &g, &needs);
                    for ((&j, need), ig) in rec.inputs.iter().zip(&needs).zip(input_grads) {
                        if !need {
                            continue;
                        }
                        let Some(ig) = ig else { continue };
                        debug_assert_eq!(ig.len(), self.nodes[j].value.numel());
                        match &mut grads[j] {
                            Some(acc) => acc.iter_mut().zip(&ig).for_each(|(a, b)| *a += b),
                            slot @ None => *slot = Some(ig),
                        }
                    }
                }
            }
        }
        // Differentiable leaves created after the loss never feed it.
        for (i, node) in self.nodes.iter().enumerate().skip(loss.index + 1) {
            if node.requires_grad && node.record.is_none() {
                out.insert(i, Tensor::zeros(node.value.shape()));
            }
        }
        Ok(Gradients {
            tape: self.id,
            grads: out,
        })
    }

    fn push(&mut self, node: Node) -> Var {
        self.nodes.push(node);
        Var {
            tape: self.id,
            index: self.nodes.len() - 1,
        }
    }

    fn round(&self, mut value: Tensor) -> Tensor {
        if self.precision == Precision::F32 {
            for v in value.data_mut() {
                *v = *v as f32 as f64;
            }
        }
        value
    }
}

/// Gradients of one backward pass, keyed by leaf.
#[derive(Debug)]
pub struct Gradients {
    tape: u64,
    grads: HashMap<usize, Tensor>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        if v.tape != self.tape {
            return None;
        }
        self.grads.get(&v.index)
    }

    /// Gradient for `v`, panicking if `v` is not a differentiable leaf.
    pub fn wrt(&self, v: Var) -> &Tensor {
        self.get(v).expect("no gradient recorded for variable")
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}
