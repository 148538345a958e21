//! Elementwise, reduction and shape operations with their backward rules.

use super::tape::{BackwardRule, Tape, Var};
use crate::error::TensorError;
use crate::tensor::{numel, strides, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryKind {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnaryKind {
    Neg,
    Square,
    Sqrt,
    Exp,
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Scale(f64),
    Shift(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceKind {
    Sum,
    Mean,
    Max,
}

/// For every flat index of `a`, the flat index of `b` it reads after
/// broadcasting `b` onto `a`. `Ok(None)` when the shapes are identical.
///
/// `b` is right-aligned against `a`; each of its extents must equal the
/// matching extent of `a` or be 1, and missing leading extents count as 1.
pub(crate) fn broadcast_map(a: &[usize], b: &[usize]) -> Option<Option<Vec<usize>>> {
    if a == b {
        return Some(None);
    }
    let n = numel(a);
    if numel(b) == 1 {
        return Some(Some(vec![0; n]));
    }
    if b.len() > a.len() {
        return None;
    }
    let offset = a.len() - b.len();
    let b_strides = strides(b);
    let mut eff = vec![0usize; a.len()];
    for (j, (&bd, &bs)) in b.iter().zip(&b_strides).enumerate() {
        let ad = a[offset + j];
        if bd == ad {
            eff[offset + j] = bs;
        } else if bd != 1 {
            return None;
        }
    }
    Some(Some(gather_map(a, &eff)))
}

/// Flat index map for an odometer walk over `shape` with per-axis strides `eff`.
fn gather_map(shape: &[usize], eff: &[usize]) -> Vec<usize> {
    let n = numel(shape);
    let mut map = Vec::with_capacity(n);
    let mut idx = vec![0usize; shape.len()];
    let mut cur = 0usize;
    for _ in 0..n {
        map.push(cur);
        for d in (0..shape.len()).rev() {
            idx[d] += 1;
            cur += eff[d];
            if idx[d] < shape[d] {
                break;
            }
            cur -= eff[d] * idx[d];
            idx[d] = 0;
        }
    }
    map
}

struct BinaryRule {
    kind: BinaryKind,
    map: Option<Vec<usize>>,
}

impl BinaryRule {
    fn bi(&self, i: usize) -> usize {
        self.map.as_ref().map_or(i, |m| m[i])
    }
}

impl BackwardRule for BinaryRule {
    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        g: &[f64],
        needs: &[bool],
    ) -> Vec<Option<Vec<f64>>> {
        let (a, b) = (inputs[0].data(), inputs[1].data());
        let ga = needs[0].then(|| match self.kind {
            BinaryKind::Add | BinaryKind::Sub => g.to_vec(),
            BinaryKind::Mul => g.iter().enumerate().map(|(i, gi)| gi * b[self.bi(i)]).collect(),
            BinaryKind::Div => g.iter().enumerate().map(|(i, gi)| gi / b[self.bi(i)]).collect(),
        });
        let gb = needs[1].then(|| {
            let mut gb = vec![0.0; b.len()];
            for (i, gi) in g.iter().enumerate() {
                let j = self.bi(i);
                gb[j] += match self.kind {
                    BinaryKind::Add => *gi,
                    BinaryKind::Sub => -gi,
                    BinaryKind::Mul => gi * a[i],
                    BinaryKind::Div => -gi * a[i] / (b[j] * b[j]),
                };
            }
            gb
        });
        vec![ga, gb]
    }
}

struct UnaryRule(UnaryKind);

impl BackwardRule for UnaryRule {
    fn backward(
        &self,
        inputs: &[&Tensor],
        output: &Tensor,
        g: &[f64],
        _needs: &[bool],
    ) -> Vec<Option<Vec<f64>>> {
        let x = inputs[0].data();
        let y = output.data();
        let d: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, gi)| {
                gi * match self.0 {
                    UnaryKind::Neg => -1.0,
                    UnaryKind::Square => 2.0 * x[i],
                    UnaryKind::Sqrt => 0.5 / y[i],
                    UnaryKind::Exp => y[i],
                    UnaryKind::Relu => {
                        if x[i] > 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    UnaryKind::LeakyRelu(slope) => {
                        if x[i] >= 0.0 {
                            1.0
                        } else {
                            slope
                        }
                    }
                    UnaryKind::Sigmoid => y[i] * (1.0 - y[i]),
                    UnaryKind::Scale(s) => s,
                    UnaryKind::Shift(_) => 1.0,
                }
            })
            .collect();
        vec![Some(d)]
    }
}

pub(crate) fn unary_value(kind: UnaryKind, x: f64) -> f64 {
    match kind {
        UnaryKind::Neg => -x,
        UnaryKind::Square => x * x,
        UnaryKind::Sqrt => x.sqrt(),
        UnaryKind::Exp => x.exp(),
        UnaryKind::Relu => x.max(0.0),
        UnaryKind::LeakyRelu(slope) => {
            if x >= 0.0 {
                x
            } else {
                slope * x
            }
        }
        UnaryKind::Sigmoid => {
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                let e = x.exp();
                e / (1.0 + e)
            }
        }
        UnaryKind::Scale(s) => s * x,
        UnaryKind::Shift(s) => x + s,
    }
}

struct ReduceRule {
    kind: ReduceKind,
    /// Output flat index for every input flat index.
    map: Vec<usize>,
    count: usize,
    /// Input flat index selected per output element (max only).
    argmax: Vec<usize>,
}

impl BackwardRule for ReduceRule {
    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        g: &[f64],
        _needs: &[bool],
    ) -> Vec<Option<Vec<f64>>> {
        let n = inputs[0].numel();
        let d = match self.kind {
            ReduceKind::Sum => self.map.iter().map(|&o| g[o]).collect(),
            ReduceKind::Mean => {
                let c = self.count as f64;
                self.map.iter().map(|&o| g[o] / c).collect()
            }
            ReduceKind::Max => {
                let mut d = vec![0.0; n];
                for (o, &i) in self.argmax.iter().enumerate() {
                    d[i] += g[o];
                }
                d
            }
        };
        vec![Some(d)]
    }
}

struct CumsumRule {
    shape: Vec<usize>,
    axis: usize,
}

fn cumsum_along(data: &[f64], shape: &[usize], axis: usize, reverse: bool) -> Vec<f64> {
    let mut out = data.to_vec();
    let st = strides(shape);
    let (len, step) = (shape[axis], st[axis]);
    let outer = numel(&shape[..axis]);
    let inner = step;
    for o in 0..outer {
        for i in 0..inner {
            let base = o * len * step + i;
            let mut acc = 0.0;
            for k in 0..len {
                let k = if reverse { len - 1 - k } else { k };
                let p = base + k * step;
                acc += data[p];
                out[p] = acc;
            }
        }
    }
    out
}

impl BackwardRule for CumsumRule {
    fn backward(
        &self,
        _inputs: &[&Tensor],
        _output: &Tensor,
        g: &[f64],
        _needs: &[bool],
    ) -> Vec<Option<Vec<f64>>> {
        vec![Some(cumsum_along(g, &self.shape, self.axis, true))]
    }
}

struct ReshapeRule;

impl BackwardRule for ReshapeRule {
    fn backward(
        &self,
        _inputs: &[&Tensor],
        _output: &Tensor,
        g: &[f64],
        _needs: &[bool],
    ) -> Vec<Option<Vec<f64>>> {
        vec![Some(g.to_vec())]
    }
}

struct NarrowRule {
    in_shape: Vec<usize>,
    axis: usize,
    start: usize,
    len: usize,
}

impl BackwardRule for NarrowRule {
    fn backward(
        &self,
        _inputs: &[&Tensor],
        _output: &Tensor,
        g: &[f64],
        _needs: &[bool],
    ) -> Vec<Option<Vec<f64>>> {
        let mut d = vec![0.0; numel(&self.in_shape)];
        let (outer, extent, inner) = split_axis(&self.in_shape, self.axis);
        for o in 0..outer {
            for k in 0..self.len {
                let src = (o * self.len + k) * inner;
                let dst = (o * extent + self.start + k) * inner;
                d[dst..dst + inner].copy_from_slice(&g[src..src + inner]);
            }
        }
        vec![Some(d)]
    }
}

fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    (
        numel(&shape[..axis]),
        shape[axis],
        numel(&shape[axis + 1..]),
    )
}

impl Tape {
    /// `a (op) b` with `b` broadcast onto the shape of `a`.
    pub fn binary(&mut self, kind: BinaryKind, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check(a)?;
        self.check(b)?;
        let (av, bv) = (self.value(a), self.value(b));
        let map = broadcast_map(av.shape(), bv.shape()).ok_or_else(|| {
            TensorError::ShapeMismatch {
                op: binary_name(kind),
                lhs: av.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            }
        })?;
        let (ad, bd) = (av.data(), bv.data());
        let at = |i: usize| map.as_ref().map_or(i, |m| m[i]);
        if kind == BinaryKind::Div && bd.iter().any(|&x| x == 0.0) {
            return Err(TensorError::DivisionByZero);
        }
        let data: Vec<f64> = (0..ad.len())
            .map(|i| {
                let (x, y) = (ad[i], bd[at(i)]);
                match kind {
                    BinaryKind::Add => x + y,
                    BinaryKind::Sub => x - y,
                    BinaryKind::Mul => x * y,
                    BinaryKind::Div => x / y,
                }
            })
            .collect();
        let value = Tensor::new(av.shape(), data)?;
        self.record(
            binary_name(kind),
            &[a, b],
            value,
            Box::new(BinaryRule { kind, map }),
        )
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary(BinaryKind::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary(BinaryKind::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary(BinaryKind::Mul, a, b)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary(BinaryKind::Div, a, b)
    }

    pub fn unary(&mut self, kind: UnaryKind, a: Var) -> Result<Var, TensorError> {
        self.check(a)?;
        let av = self.value(a);
        let data = av.data().iter().map(|&x| unary_value(kind, x)).collect();
        let value = Tensor::new(av.shape(), data)?;
        self.record(unary_name(kind), &[a], value, Box::new(UnaryRule(kind)))
    }

    pub fn neg(&mut self, a: Var) -> Result<Var, TensorError> {
        self.unary(UnaryKind::Neg, a)
    }

    pub fn square(&mut self, a: Var) -> Result<Var, TensorError> {
        self.unary(UnaryKind::Square, a)
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var, TensorError> {
        self.unary(UnaryKind::Sqrt, a)
    }

    pub fn exp(&mut self, a: Var) -> Result<Var, TensorError> {
        self.unary(UnaryKind::Exp, a)
    }

    pub fn mul_scalar(&mut self, a: Var, s: f64) -> Result<Var, TensorError> {
        self.unary(UnaryKind::Scale(s), a)
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Result<Var, TensorError> {
        self.unary(UnaryKind::Shift(s), a)
    }

    /// Reduces over `axes`, removing them from the shape. An empty axis list
    /// returns a copy of the input.
    pub fn reduce(&mut self, kind: ReduceKind, a: Var, axes: &[usize]) -> Result<Var, TensorError> {
        self.check(a)?;
        let av = self.value(a);
        let shape = av.shape().to_vec();
        if axes.is_empty() {
            let value = av.clone();
            return self.record("identity", &[a], value, Box::new(ReshapeRule));
        }
        let mut axes = axes.to_vec();
        axes.sort_unstable();
        axes.dedup();
        if let Some(&bad) = axes.iter().find(|&&ax| ax >= shape.len()) {
            return Err(TensorError::InvalidArgument {
                op: "reduce",
                msg: format!("axis {bad} out of range for shape {shape:?}"),
            });
        }
        if axes.iter().any(|&ax| shape[ax] == 0) {
            return Err(TensorError::InvalidArgument {
                op: "reduce",
                msg: "cannot reduce a zero-length axis".into(),
            });
        }
        let out_shape: Vec<usize> = (0..shape.len())
            .filter(|d| !axes.contains(d))
            .map(|d| shape[d])
            .collect();
        let out_strides = strides(&out_shape);
        let mut eff = vec![0usize; shape.len()];
        let mut k = 0;
        for (d, e) in eff.iter_mut().enumerate() {
            if !axes.contains(&d) {
                *e = out_strides[k];
                k += 1;
            }
        }
        let map = gather_map(&shape, &eff);
        let out_n = numel(&out_shape);
        let count = numel(&shape) / out_n;
        let data = av.data();
        let mut out = vec![0.0; out_n];
        let mut argmax = Vec::new();
        match kind {
            ReduceKind::Sum | ReduceKind::Mean => {
                for (i, &o) in map.iter().enumerate() {
                    out[o] += data[i];
                }
                if kind == ReduceKind::Mean {
                    out.iter_mut().for_each(|v| *v /= count as f64);
                }
            }
            ReduceKind::Max => {
                out.fill(f64::NEG_INFINITY);
                argmax = vec![0usize; out_n];
                for (i, &o) in map.iter().enumerate() {
                    if data[i] > out[o] {
                        out[o] = data[i];
                        argmax[o] = i;
                    }
                }
            }
        }
        let value = Tensor::new(out_shape, out)?;
        self.record(
            reduce_name(kind),
            &[a],
            value,
            Box::new(ReduceRule {
                kind,
                map,
                count,
                argmax,
            }),
        )
    }

    pub fn sum(&mut self, a: Var, axes: &[usize]) -> Result<Var, TensorError> {
        self.reduce(ReduceKind::Sum, a, axes)
    }

    pub fn mean(&mut self, a: Var, axes: &[usize]) -> Result<Var, TensorError> {
        self.reduce(ReduceKind::Mean, a, axes)
    }

    pub fn sum_all(&mut self, a: Var) -> Result<Var, TensorError> {
        let axes: Vec<usize> = (0..self.value(a).rank()).collect();
        if axes.is_empty() {
            return Ok(a);
        }
        self.sum(a, &axes)
    }

    pub fn mean_all(&mut self, a: Var) -> Result<Var, TensorError> {
        let axes: Vec<usize> = (0..self.value(a).rank()).collect();
        if axes.is_empty() {
            return Ok(a);
        }
        self.mean(a, &axes)
    }

    /// Running sum along `axis`.
    pub fn cumsum(&mut self, a: Var, axis: usize) -> Result<Var, TensorError> {
        self.check(a)?;
        let av = self.value(a);
        let shape = av.shape().to_vec();
        if axis >= shape.len() {
            return Err(TensorError::InvalidArgument {
                op: "cumsum",
                msg: format!("axis {axis} out of range for shape {shape:?}"),
            });
        }
        let data = cumsum_along(av.data(), &shape, axis, false);
        let value = Tensor::new(shape.clone(), data)?;
        self.record("cumsum", &[a], value, Box::new(CumsumRule { shape, axis }))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var, TensorError> {
        self.check(a)?;
        let value = self.value(a).clone().reshape(shape.to_vec())?;
        self.record("reshape", &[a], value, Box::new(ReshapeRule))
    }

    /// Slice `[start, start + len)` of `axis`.
    pub fn narrow(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var, TensorError> {
        self.check(a)?;
        let av = self.value(a);
        let shape = av.shape().to_vec();
        if axis >= shape.len() || len == 0 || start + len > shape[axis] {
            return Err(TensorError::InvalidArgument {
                op: "narrow",
                msg: format!("range {start}..{} invalid on axis {axis} of {shape:?}", start + len),
            });
        }
        let (outer, extent, inner) = split_axis(&shape, axis);
        let src = av.data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let from = (o * extent + start) * inner;
            data.extend_from_slice(&src[from..from + len * inner]);
        }
        let mut out_shape = shape.clone();
        out_shape[axis] = len;
        let value = Tensor::new(out_shape, data)?;
        self.record(
            "narrow",
            &[a],
            value,
            Box::new(NarrowRule {
                in_shape: shape,
                axis,
                start,
                len,
            }),
        )
    }
}

fn binary_name(kind: BinaryKind) -> &'static str {
    match kind {
        BinaryKind::Add => "add",
        BinaryKind::Sub => "sub",
        BinaryKind::Mul => "mul",
        BinaryKind::Div => "div",
    }
}

fn unary_name(kind: UnaryKind) -> &'static str {
    match kind {
        UnaryKind::Neg => "neg",
        UnaryKind::Square => "square",
        UnaryKind::Sqrt => "sqrt",
        UnaryKind::Exp => "exp",
        UnaryKind::Relu => "relu",
        UnaryKind::LeakyRelu(_) => "leaky_relu",
        UnaryKind::Sigmoid => "sigmoid",
        UnaryKind::Scale(_) => "scale",
        UnaryKind::Shift(_) => "shift",
    }
}

fn reduce_name(kind: ReduceKind) -> &'static str {
    match kind {
        ReduceKind::Sum => "sum",
        ReduceKind::Mean => "mean",
        ReduceKind::Max => "max",
    }
}
