//! CSV and JSON rendering of experiment results. Output depends only on the
//! config and the results, so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, LandscapeLoss, PdMode};
use super::ensemble::EnsembleReport;
use super::landscape::LandscapeSample;
use super::sweep::{params_text, SweepReport, SweepRow};
use super::train::PairResult;
use crate::error::{Error, Result};

pub const SWEEP_HEADER: &str = "activation,params,rep,logloss,auc,pqauc,pd_pct,d_logloss_pct,d_pqauc_pct";
pub const ENSEMBLE_HEADER: &str =
    "rep,single_pd_pct,ensemble_pd_pct,single_logloss,ensemble_logloss,single_pqauc,ensemble_pqauc";

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

/// Master seeds of the experiment (before per-repetition derivation).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MasterSeeds {
    pub data: u64,
    pub init: u64,
    pub shuffle: u64,
    pub interleave: u64,
}

impl MasterSeeds {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            data: cfg.data.seed,
            init: cfg.nondet.init_seed,
            shuffle: cfg.nondet.shuffle_seed,
            interleave: cfg.nondet.interleave_seed,
        }
    }
}

/// `# key=value` comment lines opening every CSV.
pub fn header_comments(cfg: &ExperimentConfig, command: &str) -> String {
    let s = MasterSeeds::of(cfg);
    let grid: Vec<String> = cfg.experiment.grid.iter().map(|g| g.to_string()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "# command={command}");
    let _ = writeln!(out, "# config_hash={}", cfg.hash());
    let _ = writeln!(
        out,
        "# seeds data={} init={} shuffle={} interleave={}",
        s.data, s.init, s.shuffle, s.interleave
    );
    let _ = writeln!(
        out,
        "# grid={} (smelu half-width; reciprocal beta for softplus, swish, gelu)",
        grid.join(",")
    );
    let _ = writeln!(
        out,
        "# pd_mode={}",
        match cfg.experiment.pd_mode {
            PdMode::Holdout => "holdout",
            PdMode::Progressive => "progressive",
        }
    );
    out
}

fn sweep_line(out: &mut String, r: &SweepRow) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{}",
        r.activation,
        r.params,
        r.rep,
        r.logloss,
        opt(r.auc),
        opt(r.pqauc),
        100.0 * r.pd,
        opt(r.d_logloss_pct),
        opt(r.d_pqauc_pct)
    );
}

pub fn sweep_csv(cfg: &ExperimentConfig, report: &SweepReport) -> String {
    let mut out = header_comments(cfg, "sweep");
    for f in &report.failures {
        let _ = writeln!(out, "# failed {} {} rep={}: {}", f.activation, f.params, f.rep, f.error);
    }
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in &report.rows {
        sweep_line(&mut out, r);
    }
    out
}

/// One sweep-format row for a single pair; deltas are left empty.
pub fn pair_csv(cfg: &ExperimentConfig, pair: &PairResult) -> Result<String> {
    let spec: crate::activations::ActivationSpec = pair.activation.parse()?;
    let mut out = header_comments(cfg, "train-pair");
    for (i, m) in pair.metrics.iter().enumerate() {
        let _ = writeln!(
            out,
            "# model{} logloss={} auc={} pqauc={}",
            i + 1,
            m.log_loss,
            opt(m.auc_loss),
            opt(m.pq_auc_loss)
        );
    }
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    sweep_line(
        &mut out,
        &SweepRow {
            activation: spec.kind().name().to_string(),
            params: params_text(&spec),
            grid_value: None,
            rep: pair.rep,
            logloss: pair.mean(|m| Some(m.log_loss)).unwrap(),
            auc: pair.mean(|m| m.auc_loss),
            pqauc: pair.mean(|m| m.pq_auc_loss),
            pd: pair.pd,
            d_logloss_pct: None,
            d_pqauc_pct: None,
        },
    );
    Ok(out)
}

/// One grid point per row: `x1,loss` or `x1,x2,loss`.
pub fn landscape_csv(cfg: &ExperimentConfig, sample: &LandscapeSample) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# command=landscape");
    let _ = writeln!(out, "# config_hash={}", cfg.hash());
    let _ = writeln!(out, "# seed={}", sample.seed);
    let _ = writeln!(out, "# network {}", sample.description);
    let _ = writeln!(
        out,
        "# loss {}",
        match sample.loss_kind {
            LandscapeLoss::Logistic { p1 } => format!("logistic p1={p1}"),
            LandscapeLoss::Regression { target } => format!("regression target={target}"),
        }
    );
    let _ = writeln!(out, "# strict_minima={}", sample.strict_minima());
    match &sample.x2 {
        None => {
            out.push_str("x1,loss\n");
            for (x, l) in sample.x1.iter().zip(&sample.loss) {
                let _ = writeln!(out, "{x},{l}");
            }
        }
        Some(x2) => {
            out.push_str("x1,x2,loss\n");
            for (i, a) in sample.x1.iter().enumerate() {
                for (j, b) in x2.iter().enumerate() {
                    let _ = writeln!(out, "{a},{b},{}", sample.loss[i * x2.len() + j]);
                }
            }
        }
    }
    out
}

pub fn ensemble_csv(cfg: &ExperimentConfig, report: &EnsembleReport) -> String {
    let mut out = header_comments(cfg, "ensemble");
    let s = &report.shape;
    let hidden: Vec<String> = s.hidden.iter().map(|h| h.to_string()).collect();
    let _ = writeln!(
        out,
        "# k={} component embed_dim={} hidden={} params single={} ensemble={}",
        report.k,
        s.embed_dim,
        hidden.join(","),
        s.single_params,
        s.ensemble_params
    );
    for (name, ci, scale) in [
        ("single_pd_pct", report.single_pd, 100.0),
        ("ensemble_pd_pct", report.ensemble_pd, 100.0),
        ("single_logloss", report.single_logloss, 1.0),
        ("ensemble_logloss", report.ensemble_logloss, 1.0),
    ] {
        let _ = writeln!(
            out,
            "# mean {name}={} ci95=+-{} n={}",
            scale * ci.mean,
            scale * ci.half_width,
            ci.n
        );
    }
    out.push_str(ENSEMBLE_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.rep,
            100.0 * r.single_pd,
            100.0 * r.ensemble_pd,
            r.single_logloss,
            r.ensemble_logloss,
            opt(r.single_pqauc),
            opt(r.ensemble_pqauc)
        );
    }
    out
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config_hash: String,
    seeds: MasterSeeds,
    grid: &'a [f64],
    result: &'a T,
}

/// JSON object with the command, config hash, master seeds and the result.
pub fn to_json<T: Serialize>(cfg: &ExperimentConfig, command: &str, result: &T) -> Result<String> {
    let env = Envelope {
        command,
        config_hash: cfg.hash(),
        seeds: MasterSeeds::of(cfg),
        grid: &cfg.experiment.grid,
        result,
    };
    let mut text = serde_json::to_string_pretty(&env)?;
    text.push('\n');
    Ok(text)
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}
