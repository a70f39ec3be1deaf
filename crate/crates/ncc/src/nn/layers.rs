//! Affine layers, activations and normalization with analytic backwards.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::matrix::DenseMatrix;
use crate::rng::Prng;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Flat parameter access shared by all layer types, used by the optimizer,
/// serialization and gradient checks.
pub trait ParamPack {
    fn collect_params(&self, out: &mut Vec<f64>);
    fn assign_params(&mut self, src: &mut dyn Iterator<Item = f64>);
    fn param_count(&self) -> usize;
}

// ---------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------

/// Affine map `y = x W + b` with `W` stored `in_dim x out_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

/// Gradients use the same layout as the parameters they mirror.
pub type LinearGrad = Linear;

impl Linear {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weight: DenseMatrix::zeros(in_dim, out_dim),
            bias: vec![0.0; out_dim],
        }
    }

    /// Uniform init in +-1/sqrt(in_dim), biases zero.
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut Prng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut weight = DenseMatrix::zeros(in_dim, out_dim);
        for v in weight.data_mut() {
            *v = rng.random_range(-bound..bound);
        }
        Self {
            weight,
            bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols
    }

    pub fn forward(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.cols, self.in_dim(), "linear: input dim mismatch");
        x.matmul(&self.weight).add_row_broadcast(&self.bias)
    }

    /// Returns (grad wrt input, grad wrt parameters).
    pub fn backward(&self, x: &DenseMatrix, grad_out: &DenseMatrix) -> (DenseMatrix, LinearGrad) {
        let grad_x = grad_out.matmul_nt(&self.weight);
        let grad_w = x.matmul_tn(grad_out);
        let grad_b = grad_out.col_sums();
        (
            grad_x,
            Linear {
                weight: grad_w,
                bias: grad_b,
            },
        )
    }
}

impl ParamPack for Linear {
    fn collect_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.weight.data());
        out.extend_from_slice(&self.bias);
    }

    fn assign_params(&mut self, src: &mut dyn Iterator<Item = f64>) {
        for v in self.weight.data_mut() {
            *v = src.next().expect("param stream underrun");
        }
        for v in self.bias.iter_mut() {
            *v = src.next().expect("param stream underrun");
        }
    }

    fn param_count(&self) -> usize {
        self.weight.data().len() + self.bias.len()
    }
}

// ---------------------------------------------------------------------
// GELU
// ---------------------------------------------------------------------

/// Exact Gaussian-CDF GELU: x * Phi(x).
pub fn gelu_scalar(x: f64) -> f64 {
    x * normal_cdf(x)
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn gelu(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for v in out.data_mut() {
        *v = gelu_scalar(*v);
    }
    out
}

/// `x` is the pre-activation input.
pub fn gelu_backward(x: &DenseMatrix, grad_out: &DenseMatrix) -> DenseMatrix {
    assert!(x.same_shape(grad_out), "gelu backward shape mismatch");
    let mut out = grad_out.clone();
    for (g, &xi) in out.data_mut().iter_mut().zip(x.data()) {
        *g *= normal_cdf(xi) + xi * normal_pdf(xi);
    }
    out
}

// ---------------------------------------------------------------------
// LayerNorm
// ---------------------------------------------------------------------

/// Per-row normalization to zero mean / unit variance followed by a
/// learned gain and offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gain: Vec<f64>,
    pub offset: Vec<f64>,
}

pub type LayerNormGrad = LayerNorm;

impl LayerNorm {
    pub fn identity(dim: usize) -> Self {
        Self {
            gain: vec![1.0; dim],
            offset: vec![0.0; dim],
        }
    }

    pub fn forward(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.cols, self.gain.len(), "layer_norm dim mismatch");
        let d = x.cols as f64;
        let mut out = DenseMatrix::zeros(x.rows, x.cols);
        for r in 0..x.rows {
            let row = x.row(r);
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            for (c, &v) in row.iter().enumerate() {
                out.set(r, c, self.gain[c] * (v - mean) * inv + self.offset[c]);
            }
        }
        out
    }

    pub fn backward(&self, x: &DenseMatrix, grad_out: &DenseMatrix) -> (DenseMatrix, LayerNormGrad) {
        assert!(x.same_shape(grad_out), "layer_norm backward shape mismatch");
        let d = x.cols as f64;
        let mut grad_x = DenseMatrix::zeros(x.rows, x.cols);
        let mut grad_gain = vec![0.0; x.cols];
        let mut grad_offset = vec![0.0; x.cols];
        for r in 0..x.rows {
            let row = x.row(r);
            let gout = grad_out.row(r);
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            let xhat: Vec<f64> = row.iter().map(|v| (v - mean) * inv).collect();
            for c in 0..x.cols {
                grad_gain[c] += gout[c] * xhat[c];
                grad_offset[c] += gout[c];
            }
            // d/dx of gain * xhat + offset
            let gxhat: Vec<f64> = (0..x.cols).map(|c| gout[c] * self.gain[c]).collect();
            let sum_g: f64 = gxhat.iter().sum();
            let sum_gx: f64 = gxhat.iter().zip(&xhat).map(|(g, h)| g * h).sum();
            for c in 0..x.cols {
                grad_x.set(r, c, inv * (gxhat[c] - sum_g / d - xhat[c] * sum_gx / d));
            }
        }
        (
            grad_x,
            LayerNorm {
                gain: grad_gain,
                offset: grad_offset,
            },
        )
    }
}

impl ParamPack for LayerNorm {
    fn collect_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.gain);
        out.extend_from_slice(&self.offset);
    }

    fn assign_params(&mut self, src: &mut dyn Iterator<Item = f64>) {
        for v in self.gain.iter_mut().chain(self.offset.iter_mut()) {
            *v = src.next().expect("param stream underrun");
        }
    }

    fn param_count(&self) -> usize {
        self.gain.len() + self.offset.len()
    }
}

/// Convenience free functions matching the layer API.
pub fn layer_norm(params: &LayerNorm, x: &DenseMatrix) -> DenseMatrix {
    params.forward(x)
}

pub fn layer_norm_backward(
    params: &LayerNorm,
    x: &DenseMatrix,
    grad_out: &DenseMatrix,
) -> (DenseMatrix, LayerNormGrad) {
    params.backward(x, grad_out)
}

// ---------------------------------------------------------------------
// Softmax
// ---------------------------------------------------------------------

pub fn softmax_rows(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for r in 0..out.rows {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// `probs` is the softmax output.
pub fn softmax_rows_backward(probs: &DenseMatrix, grad_out: &DenseMatrix) -> DenseMatrix {
    assert!(probs.same_shape(grad_out), "softmax backward shape mismatch");
    let mut grad = DenseMatrix::zeros(probs.rows, probs.cols);
    for r in 0..probs.rows {
        let p = probs.row(r);
        let g = grad_out.row(r);
        let dot: f64 = p.iter().zip(g).map(|(pi, gi)| pi * gi).sum();
        for c in 0..probs.cols {
            grad.set(r, c, p[c] * (g[c] - dot));
        }
    }
    grad
}

// ---------------------------------------------------------------------
// MLP: stacked linear layers with GELU between them
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub layers: Vec<LinearGrad>,
}

/// Intermediate values needed by the backward pass.
pub struct MlpCache {
    /// Input to each linear layer.
    inputs: Vec<DenseMatrix>,
    /// Pre-activation outputs of all but the last layer.
    pre_acts: Vec<DenseMatrix>,
}

impl Mlp {
    /// Builds a stack with the given dims, e.g. `[in, hidden, out]`.
    pub fn init(dims: &[usize], rng: &mut Prng) -> Self {
        assert!(dims.len() >= 2, "mlp needs at least one layer");
        let layers = dims
            .windows(2)
            .map(|w| Linear::init(w[0], w[1], rng))
            .collect();
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn forward(&self, x: &DenseMatrix) -> DenseMatrix {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &DenseMatrix) -> (DenseMatrix, MlpCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_acts = Vec::with_capacity(self.layers.len().saturating_sub(1));
        let mut cur = x.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            inputs.push(cur.clone());
            let z = layer.forward(&cur);
            if idx + 1 < self.layers.len() {
                pre_acts.push(z.clone());
                cur = gelu(&z);
            } else {
                cur = z;
            }
        }
        (cur, MlpCache { inputs, pre_acts })
    }

    pub fn backward(&self, cache: &MlpCache, grad_out: &DenseMatrix) -> (DenseMatrix, MlpGrad) {
        let mut grads = vec![Linear::zeros(0, 0); self.layers.len()];
        let mut g = grad_out.clone();
        for idx in (0..self.layers.len()).rev() {
            if idx + 1 < self.layers.len() {
                g = gelu_backward(&cache.pre_acts[idx], &g);
            }
            let (gx, gw) = self.layers[idx].backward(&cache.inputs[idx], &g);
            grads[idx] = gw;
            g = gx;
        }
        (g, MlpGrad { layers: grads })
    }
}

impl ParamPack for Mlp {
    fn collect_params(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            l.collect_params(out);
        }
    }

    fn assign_params(&mut self, src: &mut dyn Iterator<Item = f64>) {
        for l in &mut self.layers {
            l.assign_params(src);
        }
    }

    fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }
}

impl ParamPack for MlpGrad {
    fn collect_params(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            l.collect_params(out);
        }
    }

    fn assign_params(&mut self, src: &mut dyn Iterator<Item = f64>) {
        for l in &mut self.layers {
            l.assign_params(src);
        }
    }

    fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }
}
