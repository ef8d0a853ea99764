//! Training one model over a stream, and pairs of duplicate models.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, PdMode, SeedPolicy};
use crate::activations::ActivationSpec;
use crate::data::{perturb_adjacent, shuffle_window, ExampleReader, Generator, SparseExample};
use crate::error::{Error, Result};
use crate::metrics::{self, PredictionPair, ProgressiveAccumulator, ProgressiveMetrics};
use crate::net::{Model, ModelConfig, Workspace};
use crate::optim::{OptimConfig, Optimizer};

/// Derives an independent seed for (`base`, `rep`, `member`).
pub fn derive_seed(base: u64, rep: usize, member: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(((rep as u64) << 8) | member);
    rng.next_u64()
}

fn policy_member(policy: SeedPolicy, member: u64) -> u64 {
    match policy {
        SeedPolicy::Shared => 0,
        SeedPolicy::Distinct => member,
    }
}

/// Every seed used by one model of one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunSeeds {
    pub data: u64,
    pub init: u64,
    pub shuffle: u64,
    pub interleave: u64,
}

impl RunSeeds {
    /// Seeds for `member` (1 or 2) of the pair in repetition `rep`.
    pub fn for_member(cfg: &ExperimentConfig, rep: usize, member: u64) -> Self {
        let n = &cfg.nondet;
        Self {
            data: derive_seed(cfg.data.seed, rep, 0),
            init: derive_seed(n.init_seed, rep, policy_member(n.init, member)),
            shuffle: derive_seed(n.shuffle_seed, rep, policy_member(n.shuffle, member)),
            interleave: derive_seed(n.interleave_seed, rep, policy_member(n.interleave, member)),
        }
    }
}

/// Result of training one model.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: ProgressiveMetrics,
    /// Final-model predictions on the holdout, in stream order.
    pub holdout: Vec<f64>,
    /// Progressive prediction for each training example, by stream index.
    pub progressive: Vec<f64>,
    pub model: Model,
}

pub(crate) type Stream = Box<dyn Iterator<Item = Result<SparseExample>>>;

pub(crate) fn open_stream(cfg: &ExperimentConfig, data_seed: u64) -> Result<(Stream, usize)> {
    match &cfg.data_path {
        Some(path) => {
            let total = ExampleReader::open(path)?.count();
            Ok((Box::new(ExampleReader::open(path)?), total))
        }
        None => {
            let synth = crate::data::SynthConfig {
                seed: data_seed,
                ..cfg.data.clone()
            };
            let total = synth.total_examples();
            Ok((Box::new(Generator::new(&synth)?.map(Ok)), total))
        }
    }
}

/// Number of training examples; the rest of the stream is the holdout.
pub fn train_len(total: usize, holdout_fraction: f64) -> usize {
    total - ((total as f64 * holdout_fraction).round() as usize).min(total)
}

/// A model after one pass over its training stream.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: Model,
    pub metrics: ProgressiveMetrics,
    /// Progressive prediction for each training example, by stream index.
    pub progressive: Vec<f64>,
}

/// Trains one model on `examples`, evaluating each example progressively
/// before its update. Items carry their index in the unshuffled stream.
pub fn fit<I>(model_cfg: ModelConfig, optim: OptimConfig, examples: I, n_train: usize) -> Result<Fitted>
where
    I: IntoIterator<Item = Result<(usize, SparseExample)>>,
{
    let mut model = Model::new(model_cfg)?;
    let mut opt = Optimizer::new(optim, &model)?;
    let mut ws = Workspace::default();
    let mut acc = ProgressiveAccumulator::with_capacity(n_train);
    let mut progressive = vec![f64::NAN; n_train];
    for (step, item) in examples.into_iter().enumerate() {
        let (index, example) = item?;
        let p = model.forward_backward(&example, &mut ws);
        if !ws.cache.logit.is_finite() {
            return Err(Error::Divergence {
                step,
                detail: format!("logit {}", ws.cache.logit),
            });
        }
        acc.update(p, example.label, example.query);
        if let Some(slot) = progressive.get_mut(index) {
            *slot = p;
        }
        opt.step(&mut model, &ws.grads)?;
    }
    Ok(Fitted {
        model,
        metrics: acc.finalize(),
        progressive,
    })
}

/// Predictions of a trained model on a stream.
pub fn predict_all(
    model: &Model,
    examples: impl IntoIterator<Item = Result<SparseExample>>,
    first_step: usize,
) -> Result<Vec<f64>> {
    let mut cache = Default::default();
    let preds = examples
        .into_iter()
        .map(|e| e.map(|e| model.predict(&e, &mut cache)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = preds.iter().position(|p| !p.is_finite()) {
        return Err(Error::Divergence {
            step: first_step + i,
            detail: "non-finite holdout prediction".into(),
        });
    }
    Ok(preds)
}

/// Trains one model of an experiment with explicit seeds.
pub fn train_member(
    cfg: &ExperimentConfig,
    activation: &ActivationSpec,
    model_cfg: Option<ModelConfig>,
    seeds: RunSeeds,
) -> Result<RunOutput> {
    let model_cfg = match model_cfg {
        Some(mut m) => {
            m.seed = seeds.init;
            m
        }
        None => cfg.model_config(activation, seeds.init)?,
    };
    let (mut stream, total) = open_stream(cfg, seeds.data)?;
    let n_train = train_len(total, cfg.experiment.holdout_fraction);
    let fitted = {
        let train = stream.by_ref().take(n_train).enumerate().map(|(i, e)| e.map(|e| (i, e)));
        let shuffled = shuffle_window(train, cfg.nondet.shuffle_window, seeds.shuffle);
        let ordered = perturb_adjacent(shuffled, cfg.nondet.interleave_rate, seeds.interleave);
        fit(model_cfg, cfg.optim, ordered, n_train)?
    };
    let holdout = predict_all(&fitted.model, stream, n_train)?;
    Ok(RunOutput {
        metrics: fitted.metrics,
        holdout,
        progressive: fitted.progressive,
        model: fitted.model,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PairResult {
    pub activation: String,
    pub rep: usize,
    pub metrics: [ProgressiveMetrics; 2],
    /// Relative prediction difference (fraction, not percent).
    pub pd: f64,
    pub seeds: [RunSeeds; 2],
}

impl PairResult {
    /// Mean of a metric over the two models.
    pub fn mean(&self, f: impl Fn(&ProgressiveMetrics) -> Option<f64>) -> Option<f64> {
        Some((f(&self.metrics[0])? + f(&self.metrics[1])?) / 2.0)
    }
}

/// Relative PD between two runs under the configured measurement mode.
pub fn pair_pd(mode: PdMode, a: &RunOutput, b: &RunOutput) -> Result<f64> {
    let (x, y) = match mode {
        PdMode::Holdout => (&a.holdout, &b.holdout),
        PdMode::Progressive => (&a.progressive, &b.progressive),
    };
    if x.len() != y.len() {
        return Err(Error::InvalidInput("paired runs saw different streams".into()));
    }
    let pairs: Vec<PredictionPair> = x
        .iter()
        .zip(y)
        .enumerate()
        .map(|(i, (&p, &q))| PredictionPair::new(i as u64, p, q))
        .collect();
    metrics::relative_pd(&pairs)
}

/// Trains two duplicate models for repetition `rep` and measures their PD.
pub fn train_pair(cfg: &ExperimentConfig, activation: &ActivationSpec, rep: usize) -> Result<PairResult> {
    train_pair_with(cfg, activation, None, rep)
}

/// As [`train_pair`] with an explicit model architecture.
pub fn train_pair_with(
    cfg: &ExperimentConfig,
    activation: &ActivationSpec,
    model_cfg: Option<ModelConfig>,
    rep: usize,
) -> Result<PairResult> {
    let seeds = [RunSeeds::for_member(cfg, rep, 1), RunSeeds::for_member(cfg, rep, 2)];
    let a = train_member(cfg, activation, model_cfg.clone(), seeds[0])?;
    let b = train_member(cfg, activation, model_cfg, seeds[1])?;
    Ok(PairResult {
        activation: activation.to_string(),
        rep,
        pd: pair_pd(cfg.experiment.pd_mode, &a, &b)?,
        metrics: [a.metrics, b.metrics],
        seeds,
    })
}
