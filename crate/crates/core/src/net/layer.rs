use serde::{Deserialize, Serialize};

use crate::activations::{ActivationSpec, LearnableGSmelu};
use crate::error::{Error, Result};

/// Additive constant under the square root of layer normalization.
pub const LAYER_NORM_EPS: f64 = 1e-6;

/// Normalization applied by a dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Norm {
    None,
    /// Every incoming-weight row is used with L2 norm `v`.
    Weight { v: f64 },
    /// Standardizes the layer input (no learned gain or bias). Inputs of
    /// width 1 pass through unchanged.
    Layer,
}

/// The nonlinearity applied to a layer's input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerActivation {
    Fixed(ActivationSpec),
    /// gSmeLU whose five parameters are trained with the layer.
    Learned(LearnableGSmelu),
}

impl LayerActivation {
    #[inline]
    fn spec(&self) -> ActivationSpec {
        match self {
            LayerActivation::Fixed(s) => s.clone(),
            LayerActivation::Learned(l) => ActivationSpec::GSmelu(l.params()),
        }
    }

    pub fn is_learned(&self) -> bool {
        matches!(self, LayerActivation::Learned(_))
    }
}

/// Returns `v * w / ||w||_2`.
pub fn weight_normalize(w: &[f64], v: f64) -> Result<Vec<f64>> {
    let norm = l2(w);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidInput(format!(
            "cannot weight-normalize a vector of norm {norm}"
        )));
    }
    Ok(w.iter().map(|x| v * x / norm).collect())
}

/// `(a - mean) / sqrt(var + eps)` with the population variance.
pub fn layer_normalize(a: &[f64]) -> Vec<f64> {
    let mut out = a.to_vec();
    layer_normalize_in_place(&mut out);
    out
}

/// Normalizes in place and returns `1 / sqrt(var + eps)`.
fn layer_normalize_in_place(a: &mut [f64]) -> f64 {
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    let var = a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    for x in a.iter_mut() {
        *x = (*x - mean) * inv_std;
    }
    inv_std
}

/// Elementwise `min(max(a, -c), c)`.
pub fn clip(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| x.clamp(-c, c)).collect()
}

fn l2(w: &[f64]) -> f64 {
    dot(w, w).sqrt()
}

/// `out = W~ . norm(clip(f(input))) + b`, where `W~` is `W` with
/// weight-normalized rows when configured.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Stored (raw) weights, row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: LayerActivation,
    pub norm: Norm,
    pub clip: Option<f64>,
    #[serde(skip)]
    effective: Vec<f64>,
    #[serde(skip)]
    row_norms: Vec<f64>,
}

/// Per-layer intermediate values kept for the backward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerCache {
    /// Layer input before the activation.
    pub pre_activation: Vec<f64>,
    /// Activated and clipped values.
    pub post_activation: Vec<f64>,
    /// Input of the linear map (after normalization).
    pub linear_input: Vec<f64>,
    pub slope: Vec<f64>,
    /// `false` where clipping saturated.
    pub pass: Vec<bool>,
    pub inv_std: f64,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Gradient with respect to the raw learnable-activation parameters.
    pub activation: Option<[f64; 5]>,
}

impl DenseLayer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: LayerActivation,
        norm: Norm,
        clip: Option<f64>,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        if weights.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(Error::Config(format!(
                "layer {in_dim}->{out_dim} got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if let Some(c) = clip {
            if !(c > 0.0) {
                return Err(Error::Config(format!("clip bound must be positive, got {c}")));
            }
        }
        if let Norm::Weight { v } = norm {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("weight-norm value must be positive, got {v}")));
            }
        }
        if let LayerActivation::Fixed(spec) = &activation {
            spec.validate()?;
        }
        let mut layer = Self {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
            norm,
            clip,
            effective: Vec::new(),
            row_norms: Vec::new(),
        };
        layer.refresh()?;
        Ok(layer)
    }

    /// Recomputes the effective weights; call after mutating `weights`.
    pub fn refresh(&mut self) -> Result<()> {
        match self.norm {
            Norm::Weight { v } => {
                self.effective.resize(self.weights.len(), 0.0);
                self.row_norms.resize(self.out_dim, 0.0);
                for j in 0..self.out_dim {
                    let row = &self.weights[j * self.in_dim..(j + 1) * self.in_dim];
                    let norm = l2(row);
                    if norm == 0.0 || !norm.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "weight row {j} has norm {norm}"
                        )));
                    }
                    self.row_norms[j] = norm;
                    let scale = v / norm;
                    for (e, w) in self.effective[j * self.in_dim..(j + 1) * self.in_dim]
                        .iter_mut()
                        .zip(row)
                    {
                        *e = w * scale;
                    }
                }
            }
            _ => {
                self.effective.clear();
                self.row_norms.clear();
            }
        }
        Ok(())
    }

    /// Projects stored rows back to norm `v` (weight-norm layers only).
    pub fn renormalize(&mut self) -> Result<()> {
        if let Norm::Weight { v } = self.norm {
            for j in 0..self.out_dim {
                let row = &mut self.weights[j * self.in_dim..(j + 1) * self.in_dim];
                let norm = l2(row);
                if norm == 0.0 || !norm.is_finite() {
                    return Err(Error::InvalidInput(format!("weight row {j} has norm {norm}")));
                }
                let scale = v / norm;
                row.iter_mut().for_each(|w| *w *= scale);
            }
        }
        self.refresh()
    }

    /// Weights used by the forward pass.
    pub fn effective_weights(&self) -> &[f64] {
        match self.norm {
            Norm::Weight { .. } => &self.effective,
            _ => &self.weights,
        }
    }

    pub fn activation_spec(&self) -> ActivationSpec {
        self.activation.spec()
    }

    pub fn num_params(&self) -> usize {
        let act = if self.activation.is_learned() {
            LearnableGSmelu::NUM_PARAMS
        } else {
            0
        };
        self.weights.len() + self.bias.len() + act
    }

    pub fn zero_grads(&self) -> LayerGrads {
        LayerGrads {
            weights: vec![0.0; self.weights.len()],
            bias: vec![0.0; self.out_dim],
            activation: self.activation.is_learned().then_some([0.0; 5]),
        }
    }

    pub fn forward(&self, input: &[f64], cache: &mut LayerCache) {
        debug_assert_eq!(input.len(), self.in_dim);
        let learned;
        let spec = match &self.activation {
            LayerActivation::Fixed(s) => s,
            LayerActivation::Learned(l) => {
                learned = ActivationSpec::GSmelu(l.params());
                &learned
            }
        };
        cache.pre_activation.clear();
        cache.pre_activation.extend_from_slice(input);
        cache.post_activation.resize(self.in_dim, 0.0);
        cache.slope.resize(self.in_dim, 0.0);
        cache.pass.resize(self.in_dim, true);
        for i in 0..self.in_dim {
            let (y, dy) = spec.apply(input[i]);
            cache.slope[i] = dy;
            match self.clip {
                Some(c) if y > c || y < -c => {
                    cache.post_activation[i] = y.clamp(-c, c);
                    cache.pass[i] = false;
                }
                _ => {
                    cache.post_activation[i] = y;
                    cache.pass[i] = true;
                }
            }
        }
        cache.linear_input.clear();
        cache.linear_input.extend_from_slice(&cache.post_activation);
        cache.inv_std = 1.0;
        if self.norm == Norm::Layer && self.in_dim >= 2 {
            cache.inv_std = layer_normalize_in_place(&mut cache.linear_input);
        }
        let w = self.effective_weights();
        cache.output.resize(self.out_dim, 0.0);
        let h = &cache.linear_input;
        for j in 0..self.out_dim {
            let row = &w[j * self.in_dim..(j + 1) * self.in_dim];
            cache.output[j] = self.bias[j] + dot(row, h);
        }
    }

    /// Accumulates parameter gradients for upstream gradient `d_out` into
    /// `grads` and writes the gradient with respect to the layer input.
    pub fn backward(
        &self,
        cache: &LayerCache,
        d_out: &[f64],
        grads: &mut LayerGrads,
        d_input: &mut Vec<f64>,
    ) {
        let n = self.in_dim;
        let h = &cache.linear_input;
        let w = self.effective_weights();
        for j in 0..self.out_dim {
            grads.bias[j] += d_out[j];
        }
        match self.norm {
            Norm::Weight { v } => {
                // dL/dw = (v/|w|) (dL/dw~ - w~ (w~ . dL/dw~) / v^2), dL/dw~ = d_j h
                for j in 0..self.out_dim {
                    let dj = d_out[j];
                    if dj == 0.0 {
                        continue;
                    }
                    let row = &w[j * n..(j + 1) * n];
                    let proj = dot(row, h) / (v * v);
                    let scale = dj * v / self.row_norms[j];
                    let g = &mut grads.weights[j * n..(j + 1) * n];
                    for i in 0..n {
                        g[i] += scale * (h[i] - row[i] * proj);
                    }
                }
            }
            _ => {
                for j in 0..self.out_dim {
                    let dj = d_out[j];
                    if dj == 0.0 {
                        continue;
                    }
                    let g = &mut grads.weights[j * n..(j + 1) * n];
                    for i in 0..n {
                        g[i] += dj * h[i];
                    }
                }
            }
        }

        // gradient w.r.t. the linear input
        d_input.clear();
        d_input.resize(n, 0.0);
        for j in 0..self.out_dim {
            let dj = d_out[j];
            if dj == 0.0 {
                continue;
            }
            let row = &w[j * n..(j + 1) * n];
            for i in 0..n {
                d_input[i] += dj * row[i];
            }
        }

        if self.norm == Norm::Layer && n >= 2 {
            let nf = n as f64;
            let mean_d = d_input.iter().sum::<f64>() / nf;
            let mean_dh = dot(d_input, h) / nf;
            for i in 0..n {
                d_input[i] = cache.inv_std * (d_input[i] - mean_d - h[i] * mean_dh);
            }
        }

        for i in 0..n {
            if !cache.pass[i] {
                d_input[i] = 0.0;
            }
        }

        if let (LayerActivation::Learned(learned), Some(acc)) =
            (&self.activation, grads.activation.as_mut())
        {
            let params = learned.params();
            for i in 0..n {
                if d_input[i] == 0.0 {
                    continue;
                }
                let raw = learned.raw_grads(&params.param_grads(cache.pre_activation[i]));
                for k in 0..5 {
                    acc[k] += d_input[i] * raw[k];
                }
            }
        }

        for i in 0..n {
            d_input[i] *= cache.slope[i];
        }
    }
}

/// Dot product with four independent partial sums (vectorizes; the
/// summation order is fixed, so results are deterministic).
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
