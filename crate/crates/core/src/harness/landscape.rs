//! Loss of a frozen random network as a function of one or two of its
//! inputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{LandscapeConfig, LandscapeLoss, LandscapeRegime};
use crate::activations::ActivationSpec;
use crate::error::{Error, Result};
use crate::net::{build_stack, DenseStack, InitConfig, Norm, StackCache};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeSample {
    pub x1: Vec<f64>,
    /// Second axis for 2-D scans.
    pub x2: Option<Vec<f64>>,
    /// Row-major over (x1, x2): `loss[i * x2.len() + j]`.
    pub loss: Vec<f64>,
    pub description: String,
    pub seed: u64,
    pub loss_kind: LandscapeLoss,
}

/// Weight/bias initialization and normalization of a regime.
pub fn regime_setup(regime: LandscapeRegime, v: f64) -> (InitConfig, Norm) {
    let (w, b, norm) = match regime {
        LandscapeRegime::WeightNorm => (5.0, 0.5, Norm::Weight { v }),
        LandscapeRegime::LayerNorm => (1.0, 1.0, Norm::Layer),
        LandscapeRegime::WeightNormUnit => (1.0, 1.0, Norm::Weight { v }),
    };
    let init = InitConfig {
        weight_std: Some(w),
        bias_std: b,
        embedding_std: 0.0,
    };
    (init, norm)
}

/// The random network `inputs -> hidden... -> 1`. The raw inputs enter the
/// first layer without an activation so that every input value matters.
pub fn random_network(cfg: &LandscapeConfig, seed: u64) -> Result<DenseStack> {
    let mut dims = vec![cfg.inputs];
    dims.extend(&cfg.hidden);
    dims.push(1);
    let mut activations = vec![cfg.activation.clone(); dims.len() - 1];
    activations[0] = ActivationSpec::Identity;
    let (init, norm) = regime_setup(cfg.regime, cfg.norm_v);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build_stack(&dims, &activations, false, norm, cfg.clip, &init, &mut rng)
}

/// Loss of score `s`.
pub fn loss_of(loss: LandscapeLoss, s: f64) -> f64 {
    let softplus = |z: f64| if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    match loss {
        LandscapeLoss::Logistic { p1 } => p1 * softplus(-s) + (1.0 - p1) * softplus(s),
        LandscapeLoss::Regression { target } => (s - target) * (s - target),
    }
}

/// `points` evenly spaced values on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

pub fn describe(cfg: &LandscapeConfig) -> String {
    let hidden: Vec<String> = cfg.hidden.iter().map(|h| h.to_string()).collect();
    let regime = match cfg.regime {
        LandscapeRegime::WeightNorm => "weights N(0,25) biases N(0,0.25) weight norm",
        LandscapeRegime::LayerNorm => "weights N(0,1) biases N(0,1) layer norm",
        LandscapeRegime::WeightNormUnit => "weights N(0,1) biases N(0,1) weight norm",
    };
    let clip = cfg.clip.map_or("none".to_string(), |c| c.to_string());
    format!(
        "inputs={} hidden=[{}] activation={} {regime} clip={clip}",
        cfg.inputs,
        hidden.join(","),
        cfg.activation
    )
}

/// Samples the loss over the configured grid for network seed `cfg.seed`.
pub fn landscape(cfg: &LandscapeConfig) -> Result<LandscapeSample> {
    let net = random_network(cfg, cfg.seed)?;
    let x1 = grid(cfg.range.0, cfg.range.1, cfg.points);
    let mut cache = StackCache::default();
    let mut input = vec![0.0; cfg.inputs];
    let mut eval = |input: &[f64]| loss_of(cfg.loss, net.forward_into(input, &mut cache));
    let (x2, loss) = if cfg.inputs == 1 {
        let loss = x1
            .iter()
            .map(|&a| {
                input[0] = a;
                eval(&input)
            })
            .collect();
        (None, loss)
    } else {
        let x2 = x1.clone();
        let mut loss = Vec::with_capacity(x1.len() * x2.len());
        for &a in &x1 {
            for &b in &x2 {
                input[0] = a;
                input[1] = b;
                loss.push(eval(&input));
            }
        }
        (Some(x2), loss)
    };
    if let Some(i) = loss.iter().position(|l: &f64| !l.is_finite()) {
        return Err(Error::Divergence {
            step: i,
            detail: "non-finite landscape loss".into(),
        });
    }
    Ok(LandscapeSample {
        x1,
        x2,
        loss,
        description: describe(cfg),
        seed: cfg.seed,
        loss_kind: cfg.loss,
    })
}

/// Interior points strictly below both neighbours.
pub fn count_strict_minima(curve: &[f64]) -> usize {
    curve
        .windows(3)
        .filter(|w| w[1] < w[0] && w[1] < w[2])
        .count()
}

/// Largest singular value by power iteration on `W^T W`.
pub fn spectral_norm(w: &[f64], rows: usize, cols: usize) -> f64 {
    let mut x = vec![1.0 / (cols as f64).sqrt(); cols];
    let mut y = vec![0.0; rows];
    let mut sigma = 0.0;
    for _ in 0..500 {
        for (j, yj) in y.iter_mut().enumerate() {
            *yj = (0..cols).map(|i| w[j * cols + i] * x[i]).sum();
        }
        let mut z = vec![0.0; cols];
        for (j, yj) in y.iter().enumerate() {
            for (i, zi) in z.iter_mut().enumerate() {
                *zi += w[j * cols + i] * yj;
            }
        }
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi = zi / norm);
        if (next - sigma).abs() <= 1e-12 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

impl LandscapeSample {
    pub fn strict_minima(&self) -> usize {
        match &self.x2 {
            None => count_strict_minima(&self.loss),
            Some(x2) => {
                let (n1, n2) = (self.x1.len(), x2.len());
                let at = |i: usize, j: usize| self.loss[i * n2 + j];
                let mut count = 0;
                for i in 1..n1 - 1 {
                    for j in 1..n2 - 1 {
                        let c = at(i, j);
                        if c < at(i - 1, j) && c < at(i + 1, j) && c < at(i, j - 1) && c < at(i, j + 1)
                        {
                            count += 1;
                        }
                    }
                }
                count
            }
        }
    }
}
