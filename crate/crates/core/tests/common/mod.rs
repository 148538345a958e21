//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use convnilm_core::model::{ModelConfig, Variant};
use convnilm_core::nn::Padding;
use rand::Rng;

pub fn uniform(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Uniform in `[-1, 1]` with magnitude at least `gap`.
pub fn away_from_zero(rng: &mut impl Rng, n: usize, gap: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let m = rng.gen_range(gap..1.0);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect()
}

/// Geometry for the naive convolution.
#[derive(Clone, Copy, Debug)]
pub struct NaiveConv {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub stride: usize,
    pub dilation: usize,
    pub padding: Padding,
    pub depthwise: bool,
}

impl NaiveConv {
    pub fn pads(&self) -> (usize, usize) {
        let total = self.dilation * (self.k - 1);
        match self.padding {
            Padding::None => (0, 0),
            Padding::CausalLeft => (total, 0),
            Padding::SameSymmetric => (total / 2, total - total / 2),
        }
    }

    /// Sliding window over the explicitly padded input, `x` as `[cin][t]`
    /// and `w` flat `[cout][cin_per_group][k]`.
    pub fn run(&self, x: &[Vec<f64>], w: &[f64], b: Option<&[f64]>) -> Vec<Vec<f64>> {
        let (pl, pr) = self.pads();
        let t = x[0].len();
        let padded: Vec<Vec<f64>> = x
            .iter()
            .map(|row| {
                let mut p = vec![0.0; pl];
                p.extend_from_slice(row);
                p.extend(std::iter::repeat(0.0).take(pr));
                p
            })
            .collect();
        let span = self.dilation * (self.k - 1) + 1;
        let t_out = (t + pl + pr - span) / self.stride + 1;
        let per_group = if self.depthwise { 1 } else { self.cin };
        let mut y = vec![vec![0.0; t_out]; self.cout];
        for o in 0..self.cout {
            for (i, out) in y[o].iter_mut().enumerate() {
                let mut acc = b.map_or(0.0, |b| b[o]);
                for ci in 0..per_group {
                    let src = if self.depthwise { o } else { ci };
                    for j in 0..self.k {
                        acc += w[(o * per_group + ci) * self.k + j]
                            * padded[src][i * self.stride + j * self.dilation];
                    }
                }
                *out = acc;
            }
        }
        y
    }
}

pub fn brute_mae(pred: &[Vec<f64>], target: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let mut per = Vec::new();
    for i in 0..target.len() {
        let mut s = 0.0;
        for t in 0..target[i].len() {
            s += (pred[i][t] - target[i][t]).abs();
        }
        per.push(s / target[i].len() as f64);
    }
    let total = per.iter().sum::<f64>() / per.len() as f64;
    (per, total)
}

pub fn brute_est_acc(pred: &[Vec<f64>], target: &[Vec<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..target.len() {
        for t in 0..target[i].len() {
            num += (pred[i][t] - target[i][t]).abs();
            den += target[i][t];
        }
    }
    1.0 - num / (2.0 * den)
}

pub fn brute_sae(pred: &[Vec<f64>], target: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let mut per = Vec::new();
    for i in 0..target.len() {
        let (mut r, mut r_hat) = (0.0, 0.0);
        for t in 0..target[i].len() {
            r += target[i][t];
            r_hat += pred[i][t];
        }
        per.push((r_hat - r).abs() / r);
    }
    let total = per.iter().sum::<f64>() / per.len() as f64;
    (per, total)
}

/// Small configuration with every size given explicitly.
#[allow(clippy::too_many_arguments)]
pub fn config(
    variant: Variant,
    n: usize,
    l: usize,
    s: usize,
    b: usize,
    h: usize,
    p: usize,
    x: usize,
    r: usize,
    c: usize,
) -> ModelConfig {
    let mut cfg = ModelConfig::standard(variant, c);
    cfg.n_filters = n;
    cfg.filter_len = l;
    cfg.stride = s;
    cfg.bottleneck = b;
    cfg.hidden = h;
    cfg.kernel = p;
    cfg.blocks = x;
    cfg.repeats = r;
    cfg
}

/// `1 + R (P - 1) (2^X - 1)` frames, counted layer by layer.
pub fn stack_frames(cfg: &ModelConfig) -> usize {
    let mut reach = 0;
    for _ in 0..cfg.repeats {
        for x in 0..cfg.blocks {
            reach += (cfg.kernel - 1) << x;
        }
    }
    reach + 1
}
