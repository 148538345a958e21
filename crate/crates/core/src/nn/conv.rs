use serde::{Deserialize, Serialize};

use crate::autodiff::{BackwardRule, Tape, Var};
use crate::error::TensorError;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Padding {
    /// No padding; the kernel span must fit inside the input.
    None,
    /// `dilation * (kernel_size - 1)` zeros split evenly, the extra one on the right.
    SameSymmetric,
    /// `dilation * (kernel_size - 1)` zeros on the left only.
    CausalLeft,
}

/// Geometry of a 1-D convolution over a `[channels, time]` input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conv1dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub dilation: usize,
    pub padding: Padding,
    /// One kernel per channel; requires `in_channels == out_channels`.
    pub depthwise: bool,
    pub bias: bool,
}

impl Conv1dSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel_size: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_size,
            stride: 1,
            dilation: 1,
            padding: Padding::None,
            depthwise: false,
            bias: true,
        }
    }

    /// 1x1 convolution with bias.
    pub fn pointwise(in_channels: usize, out_channels: usize) -> Self {
        Self::new(in_channels, out_channels, 1)
    }

    pub fn depthwise(channels: usize, kernel_size: usize, dilation: usize, padding: Padding) -> Self {
        Self {
            dilation,
            padding,
            depthwise: true,
            bias: false,
            ..Self::new(channels, channels, kernel_size)
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_dilation(mut self, dilation: usize) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn with_padding(mut self, padding: Padding) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_bias(mut self, bias: bool) -> Self {
        self.bias = bias;
        self
    }

    pub fn validate(&self) -> Result<(), TensorError> {
        let bad = |msg: String| Err(TensorError::InvalidArgument { op: "conv1d", msg });
        if self.in_channels == 0 || self.out_channels == 0 || self.kernel_size == 0 {
            return bad("channel counts and kernel size must be positive".into());
        }
        if self.stride == 0 || self.dilation == 0 {
            return bad("stride and dilation must be at least 1".into());
        }
        if self.depthwise && self.in_channels != self.out_channels {
            return bad(format!(
                "depthwise conv needs in == out channels, got {} -> {}",
                self.in_channels, self.out_channels
            ));
        }
        Ok(())
    }

    pub fn groups(&self) -> usize {
        if self.depthwise {
            self.in_channels
        } else {
            1
        }
    }

    /// `[out_channels, in_channels / groups, kernel_size]`.
    pub fn weight_shape(&self) -> [usize; 3] {
        [
            self.out_channels,
            self.in_channels / self.groups(),
            self.kernel_size,
        ]
    }

    pub fn param_count(&self) -> usize {
        let [o, i, k] = self.weight_shape();
        o * i * k + if self.bias { self.out_channels } else { 0 }
    }

    /// Dilated kernel span `dilation * (kernel_size - 1) + 1`.
    pub fn span(&self) -> usize {
        self.dilation * (self.kernel_size - 1) + 1
    }

    /// Zeros added on the (left, right).
    pub fn pads(&self) -> (usize, usize) {
        let total = self.span() - 1;
        match self.padding {
            Padding::None => (0, 0),
            Padding::SameSymmetric => (total / 2, total - total / 2),
            Padding::CausalLeft => (total, 0),
        }
    }

    /// `floor((T + pad_total - dilation * (kernel_size - 1) - 1) / stride) + 1`.
    pub fn output_len(&self, t_in: usize) -> Result<usize, TensorError> {
        let (l, r) = self.pads();
        let padded = t_in + l + r;
        if padded < self.span() {
            return Err(TensorError::InvalidArgument {
                op: "conv1d",
                msg: format!(
                    "kernel span {} exceeds padded input length {padded}",
                    self.span()
                ),
            });
        }
        Ok((padded - self.span()) / self.stride + 1)
    }
}

/// Unfolds the input of group `g` into `[cin_g * kernel_size, t_out]` columns.
fn im2col(x: &[f64], t_in: usize, t_out: usize, spec: &Conv1dSpec, g: usize, cols: &mut [f64]) {
    let cin_g = spec.in_channels / spec.groups();
    let (left, _) = spec.pads();
    let k = spec.kernel_size;
    for ci in 0..cin_g {
        let src = &x[(g * cin_g + ci) * t_in..(g * cin_g + ci + 1) * t_in];
        for j in 0..k {
            let row = &mut cols[(ci * k + j) * t_out..(ci * k + j + 1) * t_out];
            for (t, c) in row.iter_mut().enumerate() {
                let p = (t * spec.stride + j * spec.dilation) as isize - left as isize;
                *c = if p >= 0 && (p as usize) < t_in {
                    src[p as usize]
                } else {
                    0.0
                };
            }
        }
    }
}

/// Forward kernel on raw buffers: `x` is `[in_channels, t_in]`, the result
/// `[out_channels, t_out]`.
///
/// Each output element is accumulated as `bias + sum_r w[r] * col[r]` in a
/// fixed order of `r`, so its value does not depend on how much of the
/// signal surrounds it.
pub(crate) fn conv1d_forward(
    x: &[f64],
    t_in: usize,
    w: &[f64],
    bias: Option<&[f64]>,
    spec: &Conv1dSpec,
) -> Result<(Vec<f64>, usize), TensorError> {
    let t_out = spec.output_len(t_in)?;
    let groups = spec.groups();
    let cin_g = spec.in_channels / groups;
    let cout_g = spec.out_channels / groups;
    let rows = cin_g * spec.kernel_size;
    let mut cols = vec![0.0; rows * t_out];
    let mut out = vec![0.0; spec.out_channels * t_out];
    for g in 0..groups {
        im2col(x, t_in, t_out, spec, g, &mut cols);
        for co in 0..cout_g {
            let oc = g * cout_g + co;
            let dst = &mut out[oc * t_out..(oc + 1) * t_out];
            if let Some(b) = bias {
                dst.fill(b[oc]);
            }
            let wrow = &w[oc * rows..(oc + 1) * rows];
            for (r, &wv) in wrow.iter().enumerate() {
                let col = &cols[r * t_out..(r + 1) * t_out];
                for (d, &c) in dst.iter_mut().zip(col) {
                    *d += wv * c;
                }
            }
        }
    }
    Ok((out, t_out))
}

struct ConvRule {
    spec: Conv1dSpec,
    t_in: usize,
    t_out: usize,
}

impl BackwardRule for ConvRule {
    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        g: &[f64],
        needs: &[bool],
    ) -> Vec<Option<Vec<f64>>> {
        let spec = &self.spec;
        let (x, w) = (inputs[0].data(), inputs[1].data());
        let (t_in, t_out) = (self.t_in, self.t_out);
        let groups = spec.groups();
        let cin_g = spec.in_channels / groups;
        let cout_g = spec.out_channels / groups;
        let k = spec.kernel_size;
        let rows = cin_g * k;
        let (left, _) = spec.pads();

        let mut dx = needs[0].then(|| vec![0.0; x.len()]);
        let mut dw = needs[1].then(|| vec![0.0; w.len()]);
        let mut cols = vec![0.0; rows * t_out];
        let mut dcols = vec![0.0; rows * t_out];
        for grp in 0..groups {
            if let Some(dw) = dw.as_mut() {
                im2col(x, t_in, t_out, spec, grp, &mut cols);
                for co in 0..cout_g {
                    let oc = grp * cout_g + co;
                    let grow = &g[oc * t_out..(oc + 1) * t_out];
                    for r in 0..rows {
                        let col = &cols[r * t_out..(r + 1) * t_out];
                        dw[oc * rows + r] += grow.iter().zip(col).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
            }
            if let Some(dx) = dx.as_mut() {
                dcols.fill(0.0);
                for co in 0..cout_g {
                    let oc = grp * cout_g + co;
                    let grow = &g[oc * t_out..(oc + 1) * t_out];
                    for r in 0..rows {
                        let wv = w[oc * rows + r];
                        let dcol = &mut dcols[r * t_out..(r + 1) * t_out];
                        for (d, &gv) in dcol.iter_mut().zip(grow) {
                            *d += wv * gv;
                        }
                    }
                }
                for ci in 0..cin_g {
                    let base = (grp * cin_g + ci) * t_in;
                    for j in 0..k {
                        let dcol = &dcols[(ci * k + j) * t_out..(ci * k + j + 1) * t_out];
                        for (t, &d) in dcol.iter().enumerate() {
                            let p = (t * spec.stride + j * spec.dilation) as isize - left as isize;
                            if p >= 0 && (p as usize) < t_in {
                                dx[base + p as usize] += d;
                            }
                        }
                    }
                }
            }
        }
        let mut grads = vec![dx, dw];
        if inputs.len() == 3 {
            grads.push(needs[2].then(|| {
                (0..spec.out_channels)
                    .map(|oc| g[oc * t_out..(oc + 1) * t_out].iter().sum())
                    .collect()
            }));
        }
        grads
    }
}

/// 1-D convolution of `input: [in_channels, T]` with `weight` shaped
/// [`Conv1dSpec::weight_shape`] and an optional `bias: [out_channels]`.
pub fn conv1d(
    tape: &mut Tape,
    input: Var,
    weight: Var,
    bias: Option<Var>,
    spec: &Conv1dSpec,
) -> Result<Var, TensorError> {
    spec.validate()?;
    let xs = tape.shape(input).to_vec();
    if xs.len() != 2 || xs[0] != spec.in_channels {
        return Err(TensorError::ShapeMismatch {
            op: "conv1d",
            lhs: xs,
            rhs: vec![spec.in_channels],
        });
    }
    let ws = tape.shape(weight);
    if ws != spec.weight_shape() {
        return Err(TensorError::ShapeMismatch {
            op: "conv1d",
            lhs: ws.to_vec(),
            rhs: spec.weight_shape().to_vec(),
        });
    }
    if spec.bias != bias.is_some() {
        return Err(TensorError::InvalidArgument {
            op: "conv1d",
            msg: format!("spec bias={} but bias tensor present={}", spec.bias, bias.is_some()),
        });
    }
    if let Some(b) = bias {
        if tape.shape(b) != [spec.out_channels] {
            return Err(TensorError::ShapeMismatch {
                op: "conv1d",
                lhs: tape.shape(b).to_vec(),
                rhs: vec![spec.out_channels],
            });
        }
    }
    let t_in = xs[1];
    let (out, t_out) = conv1d_forward(
        tape.value(input).data(),
        t_in,
        tape.value(weight).data(),
        bias.map(|b| tape.value(b).data()),
        spec,
    )?;
    let value = Tensor::new([spec.out_channels, t_out], out)?;
    let mut inputs = vec![input, weight];
    inputs.extend(bias);
    tape.record(
        "conv1d",
        &inputs,
        value,
        Box::new(ConvRule {
            spec: *spec,
            t_in,
            t_out,
        }),
    )
}

/// Overlap-add synthesis: `x` is `[batch, n, k]`, `v` is `[n, l]`, the
/// result `[batch, (k - 1) * stride + l]`.
pub(crate) fn transposed_forward(
    x: &[f64],
    batch: usize,
    n: usize,
    k: usize,
    v: &[f64],
    l: usize,
    stride: usize,
) -> Vec<f64> {
    let t = (k - 1) * stride + l;
    let mut out = vec![0.0; batch * t];
    for b in 0..batch {
        let dst = &mut out[b * t..(b + 1) * t];
        for frame in 0..k {
            let seg = &mut dst[frame * stride..frame * stride + l];
            for ch in 0..n {
                let coef = x[(b * n + ch) * k + frame];
                let filt = &v[ch * l..(ch + 1) * l];
                for (o, &f) in seg.iter_mut().zip(filt) {
                    *o += coef * f;
                }
            }
        }
    }
    out
}

struct TransposedRule {
    batch: usize,
    n: usize,
    k: usize,
    l: usize,
    stride: usize,
}

impl BackwardRule for TransposedRule {
    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        g: &[f64],
        needs: &[bool],
    ) -> Vec<Option<Vec<f64>>> {
        let (x, v) = (inputs[0].data(), inputs[1].data());
        let Self {
            batch,
            n,
            k,
            l,
            stride,
        } = *self;
        let t = (k - 1) * stride + l;
        let dx = needs[0].then(|| {
            let mut dx = vec![0.0; x.len()];
            for b in 0..batch {
                for ch in 0..n {
                    let filt = &v[ch * l..(ch + 1) * l];
                    for frame in 0..k {
                        let seg = &g[b * t + frame * stride..b * t + frame * stride + l];
                        dx[(b * n + ch) * k + frame] =
                            seg.iter().zip(filt).map(|(a, c)| a * c).sum();
                    }
                }
            }
            dx
        });
        let dv = needs[1].then(|| {
            let mut dv = vec![0.0; v.len()];
            for b in 0..batch {
                for frame in 0..k {
                    let seg = &g[b * t + frame * stride..b * t + frame * stride + l];
                    for ch in 0..n {
                        let coef = x[(b * n + ch) * k + frame];
                        for (d, &s) in dv[ch * l..(ch + 1) * l].iter_mut().zip(seg) {
                            *d += coef * s;
                        }
                    }
                }
            }
            dv
        });
        vec![dx, dv]
    }
}

/// Transposed convolution (overlap-add) of `input: [N, K]` or `[batch, N, K]`
/// with filters `weights: [N, L]` at hop `stride`.
///
/// Output is `[1, T]` for a rank-2 input and `[batch, T]` otherwise, with
/// `T = (K - 1) * stride + L`. This is the adjoint of a bias-free
/// `conv1d` from one channel to `N` with kernel `L` and the same stride.
pub fn transposed_conv1d(
    tape: &mut Tape,
    input: Var,
    weights: Var,
    stride: usize,
) -> Result<Var, TensorError> {
    let xs = tape.shape(input).to_vec();
    let vs = tape.shape(weights).to_vec();
    let (batch, n, k) = match xs.as_slice() {
        [n, k] => (1, *n, *k),
        [b, n, k] => (*b, *n, *k),
        _ => {
            return Err(TensorError::ShapeMismatch {
                op: "transposed_conv1d",
                lhs: xs,
                rhs: vs,
            })
        }
    };
    if vs.len() != 2 || vs[0] != n || stride == 0 {
        return Err(TensorError::ShapeMismatch {
            op: "transposed_conv1d",
            lhs: xs,
            rhs: vs,
        });
    }
    let l = vs[1];
    let out = transposed_forward(
        tape.value(input).data(),
        batch,
        n,
        k,
        tape.value(weights).data(),
        l,
        stride,
    );
    let t = (k - 1) * stride + l;
    let value = Tensor::new([batch, t], out)?;
    tape.record(
        "transposed_conv1d",
        &[input, weights],
        value,
        Box::new(TransposedRule {
            batch,
            n,
            k,
            l,
            stride,
        }),
    )
}
