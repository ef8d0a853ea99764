//! SGD and per-coordinate AdaGrad.
//!
//! Embedding accumulators are created on first touch, so a step only visits
//! the rows an example looked up. Weight-norm layers are projected back to
//! their fixed row norm after every step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Gradients, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Sgd,
    AdaGrad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub kind: OptimizerKind,
    pub lr_embedding: f64,
    pub lr_dense: f64,
    pub lr_activation: f64,
    /// Added to the accumulator under the square root.
    pub epsilon: f64,
    pub initial_accumulator: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::AdaGrad,
            lr_embedding: 0.05,
            lr_dense: 0.01,
            lr_activation: 0.001,
            epsilon: 1e-8,
            initial_accumulator: 0.0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.lr_embedding, self.lr_dense, self.lr_activation];
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Config("learning rates must be finite and >= 0".into()));
        }
        if !(self.epsilon >= 0.0) || !(self.initial_accumulator >= 0.0) {
            return Err(Error::Config("optim.epsilon and accumulator must be >= 0".into()));
        }
        if self.kind == OptimizerKind::AdaGrad && self.epsilon + self.initial_accumulator == 0.0 {
            return Err(Error::Config("adagrad needs epsilon or initial accumulator > 0".into()));
        }
        Ok(())
    }
}

/// `p <- p - lr * g`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], lr: f64) {
    debug_assert_eq!(params.len(), grads.len());
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
}

/// `G <- G + g^2; p <- p - lr * g / sqrt(G + eps)`. Coordinates whose
/// gradient is exactly zero keep their value and accumulator.
pub fn adagrad_step(accum: &mut [f64], params: &mut [f64], grads: &[f64], lr: f64, eps: f64) {
    debug_assert!(accum.len() == params.len() && params.len() == grads.len());
    for ((acc, p), &g) in accum.iter_mut().zip(params.iter_mut()).zip(grads) {
        // branch-free so the loop vectorizes; a zero gradient adds zero
        let a = *acc + g * g;
        let step = lr * g / (a + eps).sqrt();
        *acc = if g == 0.0 { *acc } else { a };
        *p = if g == 0.0 { *p } else { *p - step };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAccumulators {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: [f64; 5],
}

/// Sum-of-squares accumulators per trainable coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaGradState {
    pub layers: Vec<LayerAccumulators>,
    /// Per table: row index to accumulator row, materialized on first touch.
    pub embeddings: Vec<BTreeMap<usize, Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub config: OptimConfig,
    pub state: Option<AdaGradState>,
    pub steps: u64,
}

impl Optimizer {
    pub fn new(config: OptimConfig, model: &Model) -> Result<Self> {
        config.validate()?;
        let g0 = config.initial_accumulator;
        let state = (config.kind == OptimizerKind::AdaGrad).then(|| AdaGradState {
            layers: model
                .stack
                .layers
                .iter()
                .map(|l| LayerAccumulators {
                    weights: vec![g0; l.weights.len()],
                    bias: vec![g0; l.bias.len()],
                    activation: [g0; 5],
                })
                .collect(),
            embeddings: vec![BTreeMap::new(); model.tables.len()],
        });
        Ok(Self {
            config,
            state,
            steps: 0,
        })
    }

    /// Applies one update to every parameter with a gradient in `grads`.
    pub fn step(&mut self, model: &mut Model, grads: &Gradients) -> Result<()> {
        let cfg = self.config;
        match self.state.as_mut() {
            None => {
                for (layer, g) in model.stack.layers.iter_mut().zip(&grads.layers) {
                    sgd_step(&mut layer.weights, &g.weights, cfg.lr_dense);
                    sgd_step(&mut layer.bias, &g.bias, cfg.lr_dense);
                    if let (crate::net::LayerActivation::Learned(l), Some(ga)) =
                        (&mut layer.activation, g.activation)
                    {
                        let mut raw = l.to_array();
                        sgd_step(&mut raw, &ga, cfg.lr_activation);
                        l.apply_update(raw);
                    }
                }
                for eg in &grads.embeddings {
                    let row = model.tables[eg.table].row_mut(eg.row);
                    sgd_step(row, &eg.grad, cfg.lr_embedding);
                }
            }
            Some(state) => {
                for ((layer, g), acc) in model
                    .stack
                    .layers
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(&mut state.layers)
                {
                    adagrad_step(
                        &mut acc.weights,
                        &mut layer.weights,
                        &g.weights,
                        cfg.lr_dense,
                        cfg.epsilon,
                    );
                    adagrad_step(&mut acc.bias, &mut layer.bias, &g.bias, cfg.lr_dense, cfg.epsilon);
                    if let (crate::net::LayerActivation::Learned(l), Some(ga)) =
                        (&mut layer.activation, g.activation)
                    {
                        let mut raw = l.to_array();
                        adagrad_step(&mut acc.activation, &mut raw, &ga, cfg.lr_activation, cfg.epsilon);
                        l.apply_update(raw);
                    }
                }
                for eg in &grads.embeddings {
                    let acc = state.embeddings[eg.table]
                        .entry(eg.row)
                        .or_insert_with(|| vec![cfg.initial_accumulator; eg.grad.len()]);
                    let row = model.tables[eg.table].row_mut(eg.row);
                    adagrad_step(acc, row, &eg.grad, cfg.lr_embedding, cfg.epsilon);
                }
            }
        }
        for layer in &mut model.stack.layers {
            layer.renormalize()?;
        }
        self.steps += 1;
        Ok(())
    }
}
