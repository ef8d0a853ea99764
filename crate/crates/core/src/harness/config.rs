//! Flat `key = value` experiment configuration with `model.`, `data.`,
//! `optim.`, `nondet.`, `experiment.`, `landscape.` and `output.` sections.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::activations::{ActivationKind, ActivationSpec};
use crate::data::SynthConfig;
use crate::error::{Error, Result};
use crate::net::{InitConfig, ModelConfig, Norm, TableSpec};
use crate::optim::{OptimConfig, OptimizerKind};

/// Whether the two models of a pair draw the same seed for a randomness source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPolicy {
    Shared,
    Distinct,
}

impl SeedPolicy {
    fn name(self) -> &'static str {
        match self {
            SeedPolicy::Shared => "shared",
            SeedPolicy::Distinct => "distinct",
        }
    }
}

impl FromStr for SeedPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "shared" => Ok(SeedPolicy::Shared),
            "distinct" => Ok(SeedPolicy::Distinct),
            other => Err(Error::Config(format!("seed policy must be shared|distinct, got '{other}'"))),
        }
    }
}

/// Sources of divergence between the two models of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct NondetConfig {
    pub init: SeedPolicy,
    pub init_seed: u64,
    pub shuffle: SeedPolicy,
    pub shuffle_seed: u64,
    /// Windowed-shuffle buffer size; 1 keeps the stream order.
    pub shuffle_window: usize,
    pub interleave: SeedPolicy,
    pub interleave_seed: u64,
    /// Probability of swapping an example with its successor.
    pub interleave_rate: f64,
}

impl Default for NondetConfig {
    fn default() -> Self {
        Self {
            init: SeedPolicy::Shared,
            init_seed: 7,
            shuffle: SeedPolicy::Distinct,
            shuffle_seed: 11,
            shuffle_window: 2_000,
            interleave: SeedPolicy::Distinct,
            interleave_seed: 13,
            interleave_rate: 0.0,
        }
    }
}

impl NondetConfig {
    /// Every source shared: the two models are bit-identical twins.
    pub fn twins() -> Self {
        Self {
            init: SeedPolicy::Shared,
            shuffle: SeedPolicy::Shared,
            interleave: SeedPolicy::Shared,
            ..Self::default()
        }
    }
}

/// Where Δr is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdMode {
    /// Final models on the held-out tail of the stream.
    Holdout,
    /// Progressive-validation predictions on the training prefix.
    Progressive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub embed_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: ActivationSpec,
    /// Per-layer override of `activation` (one entry per dense layer).
    pub layer_activations: Option<Vec<ActivationSpec>>,
    /// Per-layer multipliers of the activation's beta.
    pub beta_scale: Option<Vec<f64>>,
    pub norm: Norm,
    pub clip: Option<f64>,
    pub identity_input_activation: bool,
    pub learn_activation: bool,
    pub init: InitConfig,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            embed_dim: 8,
            hidden: vec![64, 32, 16],
            activation: ActivationSpec::Relu,
            layer_activations: None,
            beta_scale: None,
            norm: Norm::Layer,
            clip: Some(6.0),
            identity_input_activation: false,
            learn_activation: false,
            init: InitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub repetitions: usize,
    pub holdout_fraction: f64,
    pub pd_mode: PdMode,
    /// Beta grid in SmeLU half-width units.
    pub grid: Vec<f64>,
    pub activations: Vec<ActivationKind>,
    pub ensemble_k: usize,
    /// Worker threads for independent jobs; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            repetitions: 1,
            holdout_fraction: 0.1,
            pd_mode: PdMode::Holdout,
            grid: vec![0.1, 0.25, 0.5, 1.0, 2.0, 4.0],
            activations: vec![ActivationKind::Relu, ActivationKind::Smelu],
            ensemble_k: 3,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LandscapeRegime {
    /// Weights N(0, 25), biases N(0, 0.25), weight normalization.
    WeightNorm,
    /// Weights and biases N(0, 1), layer normalization.
    LayerNorm,
    /// Weights and biases N(0, 1), weight normalization.
    WeightNormUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LandscapeLoss {
    /// `p1 log(1 + e^-s) + (1 - p1) log(1 + e^s)`.
    Logistic { p1: f64 },
    /// `(s - target)^2`.
    Regression { target: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeConfig {
    pub hidden: Vec<usize>,
    pub activation: ActivationSpec,
    pub regime: LandscapeRegime,
    pub clip: Option<f64>,
    pub norm_v: f64,
    pub loss: LandscapeLoss,
    /// Number of scanned inputs (1 or 2).
    pub inputs: usize,
    pub range: (f64, f64),
    pub points: usize,
    pub seed: u64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 128, 64, 32, 16],
            activation: ActivationSpec::Relu,
            regime: LandscapeRegime::WeightNorm,
            clip: Some(6.0),
            norm_v: 1.0,
            loss: LandscapeLoss::Logistic { p1: 0.5 },
            inputs: 1,
            range: (-5.0, 5.0),
            points: 2001,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub data: SynthConfig,
    /// Read examples from this file instead of generating them.
    pub data_path: Option<PathBuf>,
    pub optim: OptimConfig,
    pub nondet: NondetConfig,
    pub experiment: ExperimentSection,
    pub landscape: LandscapeConfig,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSection::default(),
            data: SynthConfig::default(),
            data_path: None,
            optim: OptimConfig::default(),
            nondet: NondetConfig::default(),
            experiment: ExperimentSection::default(),
            landscape: LandscapeConfig::default(),
            output_path: None,
            output_format: OutputFormat::Csv,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{key} = '{value}': {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_opt_f64(key: &str, value: &str) -> Result<Option<f64>> {
    match value.trim() {
        "none" | "" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn join<T: ToString>(items: &[T], sep: &str) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn kind_from_name(name: &str) -> Result<ActivationKind> {
    use ActivationKind::*;
    Ok(match name.trim() {
        "relu" => Relu,
        "smelu" => Smelu,
        "gsmelu" => GSmelu,
        "rescu" => Rescu,
        "softplus" => Softplus,
        "swish" => Swish,
        "gelu" => Gelu,
        "identity" => Identity,
        other => return Err(Error::Config(format!("unknown activation kind '{other}'"))),
    })
}

fn norm_text(norm: Norm) -> (String, Option<f64>) {
    match norm {
        Norm::None => ("none".into(), None),
        Norm::Weight { v } => ("weight".into(), Some(v)),
        Norm::Layer => ("layer".into(), None),
    }
}

/// Parses `key = value` lines into an ordered map; `#` starts a comment line.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            column: 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        let key = k.trim().to_string();
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse {
                line: i + 1,
                column: 1,
                message: format!("duplicate key '{key}'"),
            });
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_key_values(text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (section, name) = key
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("key '{key}' lacks a section prefix")))?;
        let unknown = || Err(Error::Config(format!("unknown key '{key}'")));
        match section {
            "model" => {
                let m = &mut self.model;
                match name {
                    "embed_dim" => m.embed_dim = parse(key, value)?,
                    "hidden" | "widths" => m.hidden = parse_list(key, value)?,
                    "activation" => m.activation = parse(key, value)?,
                    "layer_activations" => {
                        m.layer_activations = Some(
                            value
                                .split('|')
                                .map(|s| parse(key, s))
                                .collect::<Result<_>>()?,
                        )
                    }
                    "beta_scale" => m.beta_scale = Some(parse_list(key, value)?),
                    "norm" => {
                        let v = match m.norm {
                            Norm::Weight { v } => v,
                            _ => 1.0,
                        };
                        m.norm = match value.trim() {
                            "none" => Norm::None,
                            "weight" => Norm::Weight { v },
                            "layer" => Norm::Layer,
                            other => {
                                return Err(Error::Config(format!(
                                    "model.norm must be none|weight|layer, got '{other}'"
                                )))
                            }
                        }
                    }
                    "norm_v" => {
                        let v = parse(key, value)?;
                        if let Norm::Weight { v: ref mut cur } = m.norm {
                            *cur = v;
                        } else {
                            m.norm = Norm::Weight { v };
                        }
                    }
                    "clip" => m.clip = parse_opt_f64(key, value)?,
                    "identity_input_activation" => m.identity_input_activation = parse(key, value)?,
                    "learn_activation" => m.learn_activation = parse(key, value)?,
                    "init_weight_std" => m.init.weight_std = parse_opt_f64(key, value)?,
                    "init_bias_std" => m.init.bias_std = parse(key, value)?,
                    "init_embedding_std" => m.init.embedding_std = parse(key, value)?,
                    _ => return unknown(),
                }
            }
            "data" => {
                if name == "path" {
                    self.data_path = match value.trim() {
                        "" | "none" => None,
                        p => Some(PathBuf::from(p)),
                    };
                } else if !self.data.set(name, value)? {
                    return unknown();
                }
            }
            "optim" => {
                let o = &mut self.optim;
                match name {
                    "kind" => {
                        o.kind = match value.trim() {
                            "sgd" => OptimizerKind::Sgd,
                            "adagrad" => OptimizerKind::AdaGrad,
                            other => {
                                return Err(Error::Config(format!(
                                    "optim.kind must be sgd|adagrad, got '{other}'"
                                )))
                            }
                        }
                    }
                    "lr_embedding" => o.lr_embedding = parse(key, value)?,
                    "lr_dense" => o.lr_dense = parse(key, value)?,
                    "lr_activation" => o.lr_activation = parse(key, value)?,
                    "epsilon" => o.epsilon = parse(key, value)?,
                    "initial_accumulator" => o.initial_accumulator = parse(key, value)?,
                    _ => return unknown(),
                }
            }
            "nondet" => {
                let n = &mut self.nondet;
                match name {
                    "init" => n.init = parse(key, value)?,
                    "init_seed" => n.init_seed = parse(key, value)?,
                    "shuffle" => n.shuffle = parse(key, value)?,
                    "shuffle_seed" => n.shuffle_seed = parse(key, value)?,
                    "shuffle_window" => n.shuffle_window = parse(key, value)?,
                    "interleave" => n.interleave = parse(key, value)?,
                    "interleave_seed" => n.interleave_seed = parse(key, value)?,
                    "interleave_rate" => n.interleave_rate = parse(key, value)?,
                    _ => return unknown(),
                }
            }
            "experiment" => {
                let e = &mut self.experiment;
                match name {
                    "repetitions" => e.repetitions = parse(key, value)?,
                    "holdout_fraction" => e.holdout_fraction = parse(key, value)?,
                    "pd_mode" => {
                        e.pd_mode = match value.trim() {
                            "holdout" => PdMode::Holdout,
                            "progressive" => PdMode::Progressive,
                            other => {
                                return Err(Error::Config(format!(
                                    "experiment.pd_mode must be holdout|progressive, got '{other}'"
                                )))
                            }
                        }
                    }
                    "grid" => e.grid = parse_list(key, value)?,
                    "activations" => {
                        e.activations = value
                            .split(',')
                            .filter(|s| !s.trim().is_empty())
                            .map(kind_from_name)
                            .collect::<Result<_>>()?
                    }
                    "ensemble_k" => e.ensemble_k = parse(key, value)?,
                    "threads" => e.threads = parse(key, value)?,
                    _ => return unknown(),
                }
            }
            "landscape" => {
                let l = &mut self.landscape;
                match name {
                    "hidden" => l.hidden = parse_list(key, value)?,
                    "activation" => l.activation = parse(key, value)?,
                    "regime" => {
                        l.regime = match value.trim() {
                            "weight_norm" => LandscapeRegime::WeightNorm,
                            "layer_norm" => LandscapeRegime::LayerNorm,
                            "weight_norm_unit" => LandscapeRegime::WeightNormUnit,
                            other => {
                                return Err(Error::Config(format!(
                                "landscape.regime must be weight_norm|layer_norm|weight_norm_unit, got '{other}'"
                            )))
                            }
                        }
                    }
                    "clip" => l.clip = parse_opt_f64(key, value)?,
                    "norm_v" => l.norm_v = parse(key, value)?,
                    "loss" => {
                        l.loss = match value.trim().split_once(':') {
                            Some(("logistic", p)) => LandscapeLoss::Logistic {
                                p1: parse(key, p.trim_start_matches("p1="))?,
                            },
                            Some(("regression", t)) => LandscapeLoss::Regression {
                                target: parse(key, t.trim_start_matches("target="))?,
                            },
                            _ => {
                                return Err(Error::Config(format!(
                                    "landscape.loss must be logistic:p1=P or regression:target=T, got '{value}'"
                                )))
                            }
                        }
                    }
                    "inputs" => l.inputs = parse(key, value)?,
                    "range" => {
                        let v: Vec<f64> = parse_list(key, value)?;
                        if v.len() != 2 {
                            return Err(Error::Config("landscape.range needs lo,hi".into()));
                        }
                        l.range = (v[0], v[1]);
                    }
                    "points" => l.points = parse(key, value)?,
                    "seed" => l.seed = parse(key, value)?,
                    _ => return unknown(),
                }
            }
            "output" => match name {
                "path" => self.output_path = Some(PathBuf::from(value.trim())),
                "format" => {
                    self.output_format = match value.trim() {
                        "csv" => OutputFormat::Csv,
                        "json" => OutputFormat::Json,
                        other => {
                            return Err(Error::Config(format!(
                                "output.format must be csv|json, got '{other}'"
                            )))
                        }
                    }
                }
                _ => return unknown(),
            },
            _ => return unknown(),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.optim.validate()?;
        let m = &self.model;
        if m.embed_dim == 0 {
            return Err(Error::Config("model.embed_dim must be >= 1".into()));
        }
        let layers = m.hidden.len() + 1;
        if let Some(a) = &m.layer_activations {
            if a.len() != layers {
                return Err(Error::Config(format!(
                    "model.layer_activations has {} entries for {layers} layers",
                    a.len()
                )));
            }
        }
        if let Some(s) = &m.beta_scale {
            if s.len() != layers || s.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::Config(format!(
                    "model.beta_scale needs {layers} positive entries"
                )));
            }
        }
        let e = &self.experiment;
        if e.repetitions == 0 {
            return Err(Error::Config("experiment.repetitions must be >= 1".into()));
        }
        if !(e.holdout_fraction > 0.0 && e.holdout_fraction < 1.0) {
            return Err(Error::Config("experiment.holdout_fraction must be in (0,1)".into()));
        }
        if e.grid.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::Config("experiment.grid values must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.nondet.interleave_rate) {
            return Err(Error::Config("nondet.interleave_rate must be in [0,1]".into()));
        }
        if self.nondet.shuffle_window == 0 {
            return Err(Error::Config("nondet.shuffle_window must be >= 1".into()));
        }
        let l = &self.landscape;
        if !(l.inputs == 1 || l.inputs == 2) {
            return Err(Error::Config("landscape.inputs must be 1 or 2".into()));
        }
        if l.points < 3 || !(l.range.0 < l.range.1) {
            return Err(Error::Config("landscape needs >= 3 points and lo < hi".into()));
        }
        if let LandscapeLoss::Logistic { p1 } = l.loss {
            if !(0.0..=1.0).contains(&p1) {
                return Err(Error::Config("landscape logistic p1 must be in [0,1]".into()));
            }
        }
        Ok(())
    }

    /// The network config for one model of the experiment.
    pub fn model_config(&self, activation: &ActivationSpec, seed: u64) -> Result<ModelConfig> {
        let m = &self.model;
        let layers = m.hidden.len() + 1;
        let base = m
            .layer_activations
            .clone()
            .unwrap_or_else(|| vec![activation.clone(); layers]);
        let activations = match &m.beta_scale {
            Some(scale) => base
                .iter()
                .zip(scale)
                .map(|(a, s)| a.scale_beta(*s))
                .collect::<Result<Vec<_>>>()?,
            None => base,
        };
        let tables = (0..self.data.tables)
            .map(|t| TableSpec {
                vocab: self.data.vocab(t),
                dim: m.embed_dim,
            })
            .collect();
        let cfg = ModelConfig {
            tables,
            hidden: m.hidden.clone(),
            activations,
            learn_activation: m.learn_activation,
            norm: m.norm,
            clip: m.clip,
            identity_input_activation: m.identity_input_activation,
            init: m.init,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical sorted `key = value` rendering of every setting.
    pub fn to_key_values(&self) -> BTreeMap<String, String> {
        let mut kv = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            kv.insert(k.to_string(), v);
        };
        let m = &self.model;
        put("model.embed_dim", m.embed_dim.to_string());
        put("model.hidden", join(&m.hidden, ","));
        put("model.activation", m.activation.to_string());
        if let Some(a) = &m.layer_activations {
            put("model.layer_activations", join(a, "|"));
        }
        if let Some(s) = &m.beta_scale {
            put("model.beta_scale", join(s, ","));
        }
        let (norm, v) = norm_text(m.norm);
        put("model.norm", norm);
        if let Some(v) = v {
            put("model.norm_v", v.to_string());
        }
        put("model.clip", m.clip.map_or("none".into(), |c| c.to_string()));
        put("model.identity_input_activation", m.identity_input_activation.to_string());
        put("model.learn_activation", m.learn_activation.to_string());
        put(
            "model.init_weight_std",
            m.init.weight_std.map_or("none".into(), |c| c.to_string()),
        );
        put("model.init_bias_std", m.init.bias_std.to_string());
        put("model.init_embedding_std", m.init.embedding_std.to_string());
        for (k, v) in self.data.to_key_values() {
            put(&format!("data.{k}"), v);
        }
        if let Some(p) = &self.data_path {
            put("data.path", p.display().to_string());
        }
        let o = &self.optim;
        put(
            "optim.kind",
            match o.kind {
                OptimizerKind::Sgd => "sgd",
                OptimizerKind::AdaGrad => "adagrad",
            }
            .into(),
        );
        put("optim.lr_embedding", o.lr_embedding.to_string());
        put("optim.lr_dense", o.lr_dense.to_string());
        put("optim.lr_activation", o.lr_activation.to_string());
        put("optim.epsilon", o.epsilon.to_string());
        put("optim.initial_accumulator", o.initial_accumulator.to_string());
        let n = &self.nondet;
        put("nondet.init", n.init.name().into());
        put("nondet.init_seed", n.init_seed.to_string());
        put("nondet.shuffle", n.shuffle.name().into());
        put("nondet.shuffle_seed", n.shuffle_seed.to_string());
        put("nondet.shuffle_window", n.shuffle_window.to_string());
        put("nondet.interleave", n.interleave.name().into());
        put("nondet.interleave_seed", n.interleave_seed.to_string());
        put("nondet.interleave_rate", n.interleave_rate.to_string());
        let e = &self.experiment;
        put("experiment.repetitions", e.repetitions.to_string());
        put("experiment.holdout_fraction", e.holdout_fraction.to_string());
        put(
            "experiment.pd_mode",
            match e.pd_mode {
                PdMode::Holdout => "holdout",
                PdMode::Progressive => "progressive",
            }
            .into(),
        );
        put("experiment.grid", join(&e.grid, ","));
        put(
            "experiment.activations",
            e.activations.iter().map(|k| k.name()).collect::<Vec<_>>().join(","),
        );
        put("experiment.ensemble_k", e.ensemble_k.to_string());
        let l = &self.landscape;
        put("landscape.hidden", join(&l.hidden, ","));
        put("landscape.activation", l.activation.to_string());
        put(
            "landscape.regime",
            match l.regime {
                LandscapeRegime::WeightNorm => "weight_norm",
                LandscapeRegime::LayerNorm => "layer_norm",
                LandscapeRegime::WeightNormUnit => "weight_norm_unit",
            }
            .into(),
        );
        put("landscape.clip", l.clip.map_or("none".into(), |c| c.to_string()));
        put("landscape.norm_v", l.norm_v.to_string());
        put(
            "landscape.loss",
            match l.loss {
                LandscapeLoss::Logistic { p1 } => format!("logistic:p1={p1}"),
                LandscapeLoss::Regression { target } => format!("regression:target={target}"),
            },
        );
        put("landscape.inputs", l.inputs.to_string());
        put("landscape.range", format!("{},{}", l.range.0, l.range.1));
        put("landscape.points", l.points.to_string());
        put("landscape.seed", l.seed.to_string());
        kv
    }

    /// Canonical text form; parsing it reproduces this config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_key_values() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of the canonical text (thread count and output location
    /// excluded), hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
