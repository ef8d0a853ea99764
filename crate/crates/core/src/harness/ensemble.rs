//! Self-ensemble baseline: k narrower components whose predictions are
//! averaged, compared with a single net of the same parameter count.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::stats::{mean_ci, MeanCi};
use super::sweep::with_pool;
use super::train::{derive_seed, open_stream, train_len, train_pair, RunSeeds};
use crate::data::{perturb_adjacent, shuffle_window};
use crate::error::{Error, Result};
use crate::metrics::{self, PredictionPair, ProgressiveAccumulator, ProgressiveMetrics};
use crate::net::{ForwardCache, Model, ModelConfig, Workspace};
use crate::optim::Optimizer;

/// Largest allowed relative gap between ensemble and single-net size.
pub const BUDGET_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentShape {
    pub embed_dim: usize,
    pub hidden: Vec<usize>,
    pub component_params: usize,
    pub ensemble_params: usize,
    pub single_params: usize,
}

impl ComponentShape {
    pub fn mismatch(&self) -> f64 {
        (self.ensemble_params as f64 - self.single_params as f64).abs() / self.single_params as f64
    }
}

fn scaled(hidden: &[usize], r: f64) -> Vec<usize> {
    hidden
        .iter()
        .map(|&h| ((h as f64 * r).round() as usize).max(1))
        .collect()
}

/// Chooses a component embedding width and hidden-width scale so that `k`
/// components match the single net's parameter count within
/// [`BUDGET_TOLERANCE`]. Embedding widths near `embed_dim / k` are tried
/// first.
pub fn component_shape(cfg: &ExperimentConfig, k: usize) -> Result<ComponentShape> {
    if k < 2 {
        return Err(Error::Config("ensemble needs k >= 2 components".into()));
    }
    let base = cfg.model_config(&cfg.model.activation, 0)?;
    let single = base.num_params();
    let params = |dim: usize, hidden: &[usize]| {
        let mut c = base.clone();
        c.tables.iter_mut().for_each(|t| t.dim = dim);
        c.hidden = hidden.to_vec();
        c.num_params()
    };
    let target = cfg.model.embed_dim as f64 / k as f64;
    let mut dims: Vec<usize> = (1..=cfg.model.embed_dim).collect();
    dims.sort_by(|a, b| (*a as f64 - target).abs().total_cmp(&(*b as f64 - target).abs()));
    for dim in dims {
        let mut best: Option<ComponentShape> = None;
        for step in 1..=1000 {
            let hidden = scaled(&cfg.model.hidden, step as f64 / 1000.0);
            let component = params(dim, &hidden);
            let shape = ComponentShape {
                embed_dim: dim,
                hidden,
                component_params: component,
                ensemble_params: component * k,
                single_params: single,
            };
            if best.as_ref().map_or(true, |b| shape.mismatch() < b.mismatch()) {
                best = Some(shape);
            }
        }
        if let Some(b) = best.filter(|b| b.mismatch() <= BUDGET_TOLERANCE) {
            return Ok(b);
        }
    }
    Err(Error::Config(format!(
        "no {k}-component shape within {}% of {single} parameters",
        BUDGET_TOLERANCE * 100.0
    )))
}

/// Model configs of the k components for one ensemble; `init_seed` is split
/// into one seed per component unless `shared_components` is set.
pub fn component_configs(
    cfg: &ExperimentConfig,
    shape: &ComponentShape,
    k: usize,
    init_seed: u64,
    shared_components: bool,
) -> Result<Vec<ModelConfig>> {
    (0..k)
        .map(|c| {
            let seed = if shared_components {
                init_seed
            } else {
                derive_seed(init_seed, c, 0xE)
            };
            let mut m = cfg.model_config(&cfg.model.activation, seed)?;
            m.tables.iter_mut().for_each(|t| t.dim = shape.embed_dim);
            m.hidden = shape.hidden.clone();
            m.validate()?;
            Ok(m)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub metrics: ProgressiveMetrics,
    /// Averaged holdout predictions.
    pub holdout: Vec<f64>,
    pub models: Vec<Model>,
}

/// Trains components side by side on one stream; each example is scored
/// with the mean component prediction before any component updates.
pub fn train_ensemble(
    cfg: &ExperimentConfig,
    components: Vec<ModelConfig>,
    seeds: RunSeeds,
) -> Result<EnsembleRun> {
    let mut models = components
        .into_iter()
        .map(Model::new)
        .collect::<Result<Vec<_>>>()?;
    let mut opts = models
        .iter()
        .map(|m| Optimizer::new(cfg.optim, m))
        .collect::<Result<Vec<_>>>()?;
    let mut spaces: Vec<Workspace> = models.iter().map(|_| Workspace::default()).collect();
    let k = models.len() as f64;

    let (mut stream, total) = open_stream(cfg, seeds.data)?;
    let n_train = train_len(total, cfg.experiment.holdout_fraction);
    let mut acc = ProgressiveAccumulator::with_capacity(n_train);
    {
        let train = stream.by_ref().take(n_train);
        let shuffled = shuffle_window(train, cfg.nondet.shuffle_window, seeds.shuffle);
        let ordered = perturb_adjacent(shuffled, cfg.nondet.interleave_rate, seeds.interleave);
        for (step, example) in ordered.enumerate() {
            let example = example?;
            let mut sum = 0.0;
            for (m, ws) in models.iter().zip(spaces.iter_mut()) {
                sum += m.forward_backward(&example, ws);
                if !ws.cache.logit.is_finite() {
                    return Err(Error::Divergence {
                        step,
                        detail: format!("component logit {}", ws.cache.logit),
                    });
                }
            }
            acc.update(sum / k, example.label, example.query);
            for ((m, opt), ws) in models.iter_mut().zip(opts.iter_mut()).zip(&spaces) {
                opt.step(m, &ws.grads)?;
            }
        }
    }
    let mut cache = ForwardCache::default();
    let mut holdout = Vec::new();
    for example in stream {
        let example = example?;
        let sum: f64 = models.iter().map(|m| m.predict(&example, &mut cache)).sum();
        holdout.push(sum / k);
    }
    Ok(EnsembleRun {
        metrics: acc.finalize(),
        holdout,
        models,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleRow {
    pub rep: usize,
    pub single_pd: f64,
    pub ensemble_pd: f64,
    pub single_logloss: f64,
    pub ensemble_logloss: f64,
    pub single_pqauc: Option<f64>,
    pub ensemble_pqauc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub k: usize,
    pub shape: ComponentShape,
    pub rows: Vec<EnsembleRow>,
    pub single_pd: MeanCi,
    pub ensemble_pd: MeanCi,
    pub single_logloss: MeanCi,
    pub ensemble_logloss: MeanCi,
}

struct Side {
    pd: f64,
    logloss: f64,
    pqauc: Option<f64>,
}

fn ensemble_pair(cfg: &ExperimentConfig, shape: &ComponentShape, k: usize, rep: usize) -> Result<Side> {
    let mut runs = Vec::with_capacity(2);
    for member in [1, 2] {
        let seeds = RunSeeds::for_member(cfg, rep, member);
        let comps = component_configs(cfg, shape, k, seeds.init, false)?;
        runs.push(train_ensemble(cfg, comps, seeds)?);
    }
    let pairs: Vec<PredictionPair> = runs[0]
        .holdout
        .iter()
        .zip(&runs[1].holdout)
        .enumerate()
        .map(|(i, (&a, &b))| PredictionPair::new(i as u64, a, b))
        .collect();
    let mean = |f: fn(&ProgressiveMetrics) -> Option<f64>| {
        Some((f(&runs[0].metrics)? + f(&runs[1].metrics)?) / 2.0)
    };
    Ok(Side {
        pd: metrics::relative_pd(&pairs)?,
        logloss: mean(|m| Some(m.log_loss)).unwrap(),
        pqauc: mean(|m| m.pq_auc_loss),
    })
}

/// Per repetition: one single-net pair and one pair of k-component
/// ensembles at the same parameter budget.
pub fn ensemble_baseline(cfg: &ExperimentConfig, k: usize) -> Result<EnsembleReport> {
    let shape = component_shape(cfg, k)?;
    let reps = cfg.experiment.repetitions;
    let jobs: Vec<(usize, bool)> = (0..reps).flat_map(|r| [(r, false), (r, true)]).collect();
    let sides: Vec<Result<Side>> = with_pool(cfg.experiment.threads, || {
        jobs.par_iter()
            .map(|&(rep, ensemble)| {
                if ensemble {
                    ensemble_pair(cfg, &shape, k, rep)
                } else {
                    train_pair(cfg, &cfg.model.activation, rep).map(|p| Side {
                        pd: p.pd,
                        logloss: p.mean(|m| Some(m.log_loss)).unwrap(),
                        pqauc: p.mean(|m| m.pq_auc_loss),
                    })
                }
            })
            .collect()
    })?;
    let mut rows = Vec::with_capacity(reps);
    let mut it = sides.into_iter();
    for rep in 0..reps {
        let single = it.next().unwrap()?;
        let ens = it.next().unwrap()?;
        rows.push(EnsembleRow {
            rep,
            single_pd: single.pd,
            ensemble_pd: ens.pd,
            single_logloss: single.logloss,
            ensemble_logloss: ens.logloss,
            single_pqauc: single.pqauc,
            ensemble_pqauc: ens.pqauc,
        });
    }
    let col = |f: fn(&EnsembleRow) -> f64| mean_ci(&rows.iter().map(f).collect::<Vec<_>>());
    Ok(EnsembleReport {
        k,
        single_pd: col(|r| r.single_pd),
        ensemble_pd: col(|r| r.ensemble_pd),
        single_logloss: col(|r| r.single_logloss),
        ensemble_logloss: col(|r| r.ensemble_logloss),
        shape,
        rows,
    })
}
