//! Forward and backward kernels on flat `[height, width, depth]` buffers.
//!
//! Convolutions are valid (no padding) with stride 1. Pooling windows do not
//! overlap; trailing rows/columns that do not fill a window are dropped.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub h: usize,
    pub w: usize,
    pub d: usize,
}

impl Dims {
    pub const fn new(h: usize, w: usize, d: usize) -> Self {
        Self { h, w, d }
    }

    pub fn len(&self) -> usize {
        self.h * self.w * self.d
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn at(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.w + x) * self.d + c
    }
}

/// Kernel geometry: `filters` kernels of `kh x kw x depth`, stored
/// `[filter][row][col][depth]`, followed by `filters` biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub input: Dims,
    pub filters: usize,
    pub kh: usize,
    pub kw: usize,
}

impl ConvGeom {
    pub fn output(&self) -> Dims {
        Dims::new(self.input.h + 1 - self.kh, self.input.w + 1 - self.kw, self.filters)
    }

    pub fn kernel_len(&self) -> usize {
        self.filters * self.kh * self.kw * self.input.d
    }

    pub fn fits(&self) -> bool {
        self.kh >= 1 && self.kw >= 1 && self.kh <= self.input.h && self.kw <= self.input.w
    }
}

pub fn conv2d_forward(g: &ConvGeom, input: &[f64], kernels: &[f64], bias: &[f64], out: &mut [f64]) {
    let o = g.output();
    let d = g.input.d;
    let row_len = g.kw * d;
    for y in 0..o.h {
        for x in 0..o.w {
            for f in 0..g.filters {
                let mut acc = bias[f];
                let kbase = f * g.kh * row_len;
                for i in 0..g.kh {
                    let inp = &input[g.input.at(y + i, x, 0)..][..row_len];
                    let ker = &kernels[kbase + i * row_len..][..row_len];
                    acc += inp.iter().zip(ker).map(|(a, b)| a * b).sum::<f64>();
                }
                out[o.at(y, x, f)] = acc;
            }
        }
    }
}

/// Accumulates kernel and bias gradients into `dk`/`db` and, when given,
/// writes the input gradient into `din` (overwriting).
pub fn conv2d_backward(
    g: &ConvGeom,
    input: &[f64],
    kernels: &[f64],
    dout: &[f64],
    dk: &mut [f64],
    db: &mut [f64],
    mut din: Option<&mut [f64]>,
) {
    let o = g.output();
    let d = g.input.d;
    let row_len = g.kw * d;
    if let Some(din) = din.as_deref_mut() {
        din.fill(0.0);
    }
    for y in 0..o.h {
        for x in 0..o.w {
            for f in 0..g.filters {
                let grad = dout[o.at(y, x, f)];
                if grad == 0.0 {
                    continue;
                }
                db[f] += grad;
                let kbase = f * g.kh * row_len;
                for i in 0..g.kh {
                    let start = g.input.at(y + i, x, 0);
                    let inp = &input[start..][..row_len];
                    let dker = &mut dk[kbase + i * row_len..][..row_len];
                    for (dkv, iv) in dker.iter_mut().zip(inp) {
                        *dkv += grad * iv;
                    }
                    if let Some(din) = din.as_deref_mut() {
                        let ker = &kernels[kbase + i * row_len..][..row_len];
                        for (dv, kv) in din[start..][..row_len].iter_mut().zip(ker) {
                            *dv += grad * kv;
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Max,
    Avg,
}

pub fn pool_output(input: Dims, ph: usize, pw: usize) -> Dims {
    Dims::new(input.h / ph, input.w / pw, input.d)
}

pub fn pool_forward(kind: PoolKind, input_dims: Dims, ph: usize, pw: usize, input: &[f64], out: &mut [f64]) {
    let o = pool_output(input_dims, ph, pw);
    let area = (ph * pw) as f64;
    for y in 0..o.h {
        for x in 0..o.w {
            for c in 0..o.d {
                let cells = (0..ph).flat_map(|i| (0..pw).map(move |j| (i, j)));
                let v = match kind {
                    PoolKind::Max => cells
                        .map(|(i, j)| input[input_dims.at(y * ph + i, x * pw + j, c)])
                        .fold(f64::NEG_INFINITY, f64::max),
                    PoolKind::Avg => {
                        cells
                            .map(|(i, j)| input[input_dims.at(y * ph + i, x * pw + j, c)])
                            .sum::<f64>()
                            / area
                    }
                };
                out[o.at(y, x, c)] = v;
            }
        }
    }
}

/// Max pooling routes each gradient to the first maximal cell (row-major).
pub fn pool_backward(
    kind: PoolKind,
    input_dims: Dims,
    ph: usize,
    pw: usize,
    input: &[f64],
    dout: &[f64],
    din: &mut [f64],
) {
    let o = pool_output(input_dims, ph, pw);
    din.fill(0.0);
    let area = (ph * pw) as f64;
    for y in 0..o.h {
        for x in 0..o.w {
            for c in 0..o.d {
                let grad = dout[o.at(y, x, c)];
                match kind {
                    PoolKind::Max => {
                        let mut best = input_dims.at(y * ph, x * pw, c);
                        for i in 0..ph {
                            for j in 0..pw {
                                let idx = input_dims.at(y * ph + i, x * pw + j, c);
                                if input[idx] > input[best] {
                                    best = idx;
                                }
                            }
                        }
                        din[best] += grad;
                    }
                    PoolKind::Avg => {
                        for i in 0..ph {
                            for j in 0..pw {
                                din[input_dims.at(y * ph + i, x * pw + j, c)] += grad / area;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// `out = W x + b`, `W` stored `[units][inputs]`.
pub fn dense_forward(weights: &[f64], bias: &[f64], input: &[f64], out: &mut [f64]) {
    let n = input.len();
    for (u, o) in out.iter_mut().enumerate() {
        *o = bias[u] + weights[u * n..(u + 1) * n].iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
    }
}

pub fn dense_backward(
    weights: &[f64],
    input: &[f64],
    dout: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    din: Option<&mut [f64]>,
) {
    let n = input.len();
    for (u, &g) in dout.iter().enumerate() {
        db[u] += g;
        for (dwv, x) in dw[u * n..(u + 1) * n].iter_mut().zip(input) {
            *dwv += g * x;
        }
    }
    if let Some(din) = din {
        for (i, dv) in din.iter_mut().enumerate() {
            *dv = dout.iter().enumerate().map(|(u, g)| g * weights[u * n + i]).sum();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn forward(self, input: &[f64], out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(input) {
            *o = match self {
                Self::Relu => x.max(0.0),
                Self::Tanh => x.tanh(),
            };
        }
    }

    /// Uses the layer output `y` (relu: y > 0, tanh: 1 - y^2).
    pub fn backward(self, output: &[f64], dout: &[f64], din: &mut [f64]) {
        for ((d, &y), &g) in din.iter_mut().zip(output).zip(dout) {
            *d = match self {
                Self::Relu => {
                    if y > 0.0 {
                        g
                    } else {
                        0.0
                    }
                }
                Self::Tanh => g * (1.0 - y * y),
            };
        }
    }
}

pub fn softmax(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Cross-entropy of softmax probabilities against a class index, and the
/// gradient with respect to the logits (`p - onehot`).
pub fn softmax_cross_entropy(probs: &[f64], target: usize, dlogits: &mut [f64]) -> f64 {
    for (i, (d, &p)) in dlogits.iter_mut().zip(probs).enumerate() {
        *d = p - if i == target { 1.0 } else { 0.0 };
    }
    -probs[target].max(f64::MIN_POSITIVE).ln()
}

/// Inserts one zero column before each listed width index (indices refer to
/// the input and must be sorted ascending).
pub fn insert_columns_forward(input_dims: Dims, before: &[usize], input: &[f64], out: &mut [f64]) {
    let ow = input_dims.w + before.len();
    let od = Dims::new(input_dims.h, ow, input_dims.d);
    out.fill(0.0);
    for y in 0..input_dims.h {
        let mut shift = 0;
        for x in 0..input_dims.w {
            while shift < before.len() && before[shift] <= x {
                shift += 1;
            }
            for c in 0..input_dims.d {
                out[od.at(y, x + shift, c)] = input[input_dims.at(y, x, c)];
            }
        }
    }
}

pub fn insert_columns_backward(input_dims: Dims, before: &[usize], dout: &[f64], din: &mut [f64]) {
    let od = Dims::new(input_dims.h, input_dims.w + before.len(), input_dims.d);
    for y in 0..input_dims.h {
        let mut shift = 0;
        for x in 0..input_dims.w {
            while shift < before.len() && before[shift] <= x {
                shift += 1;
            }
            for c in 0..input_dims.d {
                din[input_dims.at(y, x, c)] = dout[od.at(y, x + shift, c)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_copies_input() {
        let g = ConvGeom {
            input: Dims::new(3, 2, 1),
            filters: 1,
            kh: 1,
            kw: 1,
        };
        let input = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut out = [0.0; 6];
        conv2d_forward(&g, &input, &[1.0], &[0.0], &mut out);
        assert_eq!(out, input);
    }

    #[test]
    fn ones_kernel_sums() {
        let g = ConvGeom {
            input: Dims::new(2, 2, 1),
            filters: 1,
            kh: 2,
            kw: 2,
        };
        let mut out = [0.0];
        conv2d_forward(&g, &[1.0; 4], &[1.0; 4], &[0.0], &mut out);
        assert_eq!(out, [4.0]);
    }

    #[test]
    fn pooling_2x2() {
        let d = Dims::new(2, 2, 1);
        let input = [1.0, 3.0, 2.0, 4.0];
        let mut out = [0.0];
        pool_forward(PoolKind::Max, d, 2, 2, &input, &mut out);
        assert_eq!(out, [4.0]);
        pool_forward(PoolKind::Avg, d, 2, 2, &input, &mut out);
        assert_eq!(out, [2.5]);

        let mut din = [0.0; 4];
        pool_backward(PoolKind::Max, d, 2, 2, &[5.0, 5.0, 1.0, 0.0], &[1.0], &mut din);
        assert_eq!(din, [1.0, 0.0, 0.0, 0.0], "ties go to the first cell");
    }

    #[test]
    fn pooling_truncates() {
        let d = Dims::new(5, 3, 2);
        assert_eq!(pool_output(d, 2, 2), Dims::new(2, 1, 2));
    }

    #[test]
    fn uniform_logits_give_ln_c() {
        let mut p = [0.0; 4];
        softmax(&[0.3; 4], &mut p);
        let mut d = [0.0; 4];
        let loss = softmax_cross_entropy(&p, 2, &mut d);
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_dense() {
        let w = [1.0, 0.0, 0.0, 1.0];
        let mut out = [0.0; 2];
        dense_forward(&w, &[0.0, 0.0], &[3.0, -2.0], &mut out);
        assert_eq!(out, [3.0, -2.0]);
    }

    #[test]
    fn inserted_columns_are_zero() {
        let d = Dims::new(1, 4, 1);
        let mut out = [9.0; 6];
        insert_columns_forward(d, &[1, 3], &[1.0, 2.0, 3.0, 4.0], &mut out);
        assert_eq!(out, [1.0, 0.0, 2.0, 3.0, 0.0, 4.0]);
        let mut din = [0.0; 4];
        insert_columns_backward(d, &[1, 3], &[1.0, 7.0, 2.0, 3.0, 7.0, 4.0], &mut din);
        assert_eq!(din, [1.0, 2.0, 3.0, 4.0]);
    }
}
