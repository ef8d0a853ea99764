//! Beta sweeps: one duplicate pair per (activation, parameter, repetition),
//! reported against a ReLU baseline pair trained on the same stream.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::train::{train_pair, PairResult};
use crate::activations::{ActivationKind, ActivationSpec};
use crate::error::{Error, Result};

/// Activations visited by a sweep, ReLU first. Beta-parameterized kinds take
/// one point per grid value: SmeLU uses the value as its half-width and the
/// smooth kinds use its reciprocal. gSmeLU and RESCU contribute the model's
/// configured activation when it is of that kind.
pub fn sweep_specs(cfg: &ExperimentConfig) -> Result<Vec<ActivationSpec>> {
    let mut out = vec![ActivationSpec::Relu];
    for &kind in &cfg.experiment.activations {
        match kind {
            ActivationKind::Relu => {}
            ActivationKind::Smelu => {
                for &g in &cfg.experiment.grid {
                    out.push(ActivationSpec::smelu(g)?);
                }
            }
            ActivationKind::Softplus | ActivationKind::Swish | ActivationKind::Gelu => {
                for &g in &cfg.experiment.grid {
                    out.push(ActivationSpec::with_beta(kind, 1.0 / g)?);
                }
            }
            ActivationKind::Identity => out.push(ActivationSpec::Identity),
            ActivationKind::GSmelu | ActivationKind::Rescu => {
                if cfg.model.activation.kind() != kind {
                    return Err(Error::Config(format!(
                        "sweeping {} needs model.activation of that kind",
                        kind.name()
                    )));
                }
                out.push(cfg.model.activation.clone());
            }
        }
    }
    Ok(out)
}

/// Text of an activation's parameters (`beta=1`), using `;` between values.
pub fn params_text(spec: &ActivationSpec) -> String {
    let text = spec.to_string();
    match text.split_once(':') {
        Some((_, p)) => p.replace(',', ";"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub activation: String,
    pub params: String,
    /// SmeLU-equivalent half-width (reciprocal for the smooth kinds).
    pub grid_value: Option<f64>,
    pub rep: usize,
    pub logloss: f64,
    pub auc: Option<f64>,
    pub pqauc: Option<f64>,
    /// Relative PD as a fraction.
    pub pd: f64,
    /// Percentage change versus the ReLU pair of the same repetition.
    pub d_logloss_pct: Option<f64>,
    pub d_pqauc_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub activation: String,
    pub params: String,
    pub rep: usize,
    pub error: String,
    pub divergence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

fn pct_change(value: Option<f64>, base: Option<f64>) -> Option<f64> {
    Some(100.0 * (value? - base?) / base?)
}

fn grid_value(spec: &ActivationSpec) -> Option<f64> {
    match spec.kind() {
        ActivationKind::Smelu => spec.beta(),
        ActivationKind::Softplus | ActivationKind::Swish | ActivationKind::Gelu => {
            spec.beta().map(|b| 1.0 / b)
        }
        _ => None,
    }
}

/// Runs `f` on a rayon pool sized by `experiment.threads` (0: rayon default).
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Sweep over [`sweep_specs`].
pub fn beta_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    beta_sweep_specs(cfg, &sweep_specs(cfg)?)
}

/// Trains a pair for every (spec, repetition); cells run in parallel and rows
/// come back in (spec order, repetition) order. Failed cells are listed in
/// `failures` and the remaining rows are kept.
pub fn beta_sweep_specs(cfg: &ExperimentConfig, specs: &[ActivationSpec]) -> Result<SweepReport> {
    if specs.is_empty() {
        return Err(Error::Config("sweep needs at least one activation".into()));
    }
    let has_relu = specs.iter().any(|s| *s == ActivationSpec::Relu);
    if !has_relu {
        return Err(Error::Config("sweep needs the ReLU baseline".into()));
    }
    let reps = cfg.experiment.repetitions;
    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|i| (0..reps).map(move |r| (i, r)))
        .collect();
    let mut results: Vec<(usize, usize, Result<PairResult>)> = with_pool(cfg.experiment.threads, || {
        jobs.par_iter()
            .map(|&(i, rep)| (i, rep, train_pair(cfg, &specs[i], rep)))
            .collect()
    })?;
    results.sort_by_key(|(i, rep, _)| (*i, *rep));

    let relu_index = specs.iter().position(|s| *s == ActivationSpec::Relu).unwrap();
    let baseline: Vec<Option<(f64, Option<f64>)>> = (0..reps)
        .map(|rep| {
            results
                .iter()
                .find(|(i, r, _)| *i == relu_index && *r == rep)
                .and_then(|(_, _, res)| res.as_ref().ok())
                .map(|p| (p.mean(|m| Some(m.log_loss)).unwrap(), p.mean(|m| m.pq_auc_loss)))
        })
        .collect();

    let mut report = SweepReport {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for (i, rep, res) in results {
        let spec = &specs[i];
        match res {
            Ok(pair) => {
                let logloss = pair.mean(|m| Some(m.log_loss)).unwrap();
                let pqauc = pair.mean(|m| m.pq_auc_loss);
                let base = baseline[rep];
                report.rows.push(SweepRow {
                    activation: spec.kind().name().to_string(),
                    params: params_text(spec),
                    grid_value: grid_value(spec),
                    rep,
                    logloss,
                    auc: pair.mean(|m| m.auc_loss),
                    pqauc,
                    pd: pair.pd,
                    d_logloss_pct: base.and_then(|b| pct_change(Some(logloss), Some(b.0))),
                    d_pqauc_pct: base.and_then(|b| pct_change(pqauc, b.1)),
                });
            }
            Err(e) => report.failures.push(SweepFailure {
                activation: spec.kind().name().to_string(),
                params: params_text(spec),
                rep,
                divergence: matches!(e, Error::Divergence { .. }),
                error: e.to_string(),
            }),
        }
    }
    Ok(report)
}

impl SweepReport {
    /// Rows of one repetition.
    pub fn rep(&self, rep: usize) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.rep == rep)
    }

    /// The ReLU row of a repetition.
    pub fn baseline(&self, rep: usize) -> Option<&SweepRow> {
        self.rep(rep).find(|r| r.activation == "relu")
    }
}
