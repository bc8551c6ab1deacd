//! Training primitives: linear layers, ReLU, dropout, softmax
//! cross-entropy, and Adam. Gradients are hand-derived per layer; every
//! backward pass is checked against finite differences in the test suite.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Affine layer parameters, W: in x out, b: out.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

impl Linear {
    /// Glorot-uniform initialization from the given stream.
    pub fn glorot(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let mut weight = DenseMatrix::zeros(in_dim, out_dim);
        for v in &mut weight.data {
            *v = rng.gen_range(-limit..limit);
        }
        Linear {
            weight,
            bias: vec![0.0; out_dim],
        }
    }

    pub fn forward(&self, input: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = input.matmul(&self.weight)?;
        for i in 0..out.rows {
            let row = out.row_mut(i);
            for (o, &b) in row.iter_mut().zip(&self.bias) {
                *o += b;
            }
        }
        Ok(out)
    }

    /// Returns (grad_input, grad_weight, grad_bias).
    pub fn backward(
        &self,
        input: &DenseMatrix,
        grad_out: &DenseMatrix,
    ) -> Result<(DenseMatrix, DenseMatrix, Vec<f64>)> {
        let grad_weight = input.transpose_matmul(grad_out)?;
        let grad_input = grad_out.matmul(&self.weight.transpose())?;
        let mut grad_bias = vec![0.0; self.bias.len()];
        for i in 0..grad_out.rows {
            for (gb, &g) in grad_bias.iter_mut().zip(grad_out.row(i)) {
                *gb += g;
            }
        }
        Ok((grad_input, grad_weight, grad_bias))
    }
}

pub fn relu_forward(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for v in &mut out.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// grad wrt the ReLU input; `input` is the pre-activation.
pub fn relu_backward(input: &DenseMatrix, grad_out: &DenseMatrix) -> DenseMatrix {
    let mut out = grad_out.clone();
    for (g, &x) in out.data.iter_mut().zip(&input.data) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
    out
}

/// Inverted dropout: keeps with probability 1-p and scales by 1/(1-p).
/// Returns the output and the keep mask (scaled), used by the backward pass.
pub fn dropout_forward(
    x: &DenseMatrix,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> (DenseMatrix, Vec<f64>) {
    assert!((0.0..1.0).contains(&p), "dropout p must be in [0, 1)");
    if p == 0.0 {
        return (x.clone(), vec![1.0; x.data.len()]);
    }
    let scale = 1.0 / (1.0 - p);
    let mask: Vec<f64> = x
        .data
        .iter()
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { scale })
        .collect();
    let mut out = x.clone();
    for (v, &m) in out.data.iter_mut().zip(&mask) {
        *v *= m;
    }
    (out, mask)
}

pub fn dropout_backward(grad_out: &DenseMatrix, mask: &[f64]) -> DenseMatrix {
    let mut out = grad_out.clone();
    for (g, &m) in out.data.iter_mut().zip(mask) {
        *g *= m;
    }
    out
}

/// Row-wise softmax; rows sum to 1.
pub fn softmax(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for i in 0..out.rows {
        let row = out.row_mut(i);
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

/// Mean cross-entropy over the masked rows, with the gradient wrt logits.
/// The gradient is zero outside the mask and each masked row sums to zero.
pub fn softmax_cross_entropy(
    logits: &DenseMatrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, DenseMatrix)> {
    if mask.is_empty() {
        return Err(Error::EmptySplit("cross-entropy mask".into()));
    }
    if labels.len() != logits.rows {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows
        )));
    }
    let probs = softmax(logits);
    let m = mask.len() as f64;
    let mut loss = 0.0;
    let mut grad = DenseMatrix::zeros(logits.rows, logits.cols);
    for &i in mask {
        if i >= logits.rows {
            return Err(Error::InvalidNode {
                node: i,
                num_nodes: logits.rows,
            });
        }
        let label = labels[i];
        if label >= logits.cols {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range for {} classes",
                logits.cols
            )));
        }
        let p = probs.get(i, label).max(1e-300);
        loss -= p.ln();
        let grow = grad.row_mut(i);
        for (c, &pv) in probs.row(i).iter().enumerate() {
            grow[c] = (pv - if c == label { 1.0 } else { 0.0 }) / m;
        }
    }
    Ok((loss / m, grad))
}

/// Adam hyperparameters. Weight decay applies to the first layer only
/// (common GNN convention) and is added as an L2 term to the gradient.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter-tensor moment accumulators.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl AdamState {
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        AdamState {
            config,
            step: 0,
            moments: shapes
                .iter()
                .map(|&len| (vec![0.0; len], vec![0.0; len]))
                .collect(),
        }
    }

    /// Advance the shared step counter; call once per optimization step,
    /// before updating the parameter tensors of that step.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    /// Standard Adam update with bias correction for tensor `idx`.
    pub fn update(&mut self, idx: usize, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged(format!(
                "non-finite gradient in parameter tensor {idx} at step {}",
                self.step
            )));
        }
        let (m, v) = &mut self.moments[idx];
        assert_eq!(params.len(), m.len(), "parameter shape changed");
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for ((p, g), (mi, vi)) in params
            .iter_mut()
            .zip(grads)
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *mi = c.beta1 * *mi + (1.0 - c.beta1) * g;
            *vi = c.beta2 * *vi + (1.0 - c.beta2) * g * g;
            let mhat = *mi / bc1;
            let vhat = *vi / bc2;
            *p -= c.lr * mhat / (vhat.sqrt() + c.epsilon);
        }
        Ok(())
    }
}
