use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smelu_repro::harness::{emit, ensemble, landscape, sweep, train, ExperimentConfig, OutputFormat};
use smelu_repro::{data, Error, Result};

#[derive(Parser)]
#[command(name = "smelu-repro", version, about = "Prediction-difference experiments with smooth activations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Activation override, e.g. `smelu:beta=1.0`.
    #[arg(long)]
    activation: Option<String>,
    /// Master data seed (network seed for `landscape`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic example stream.
    Gen(Common),
    /// Train one duplicate pair and report its metrics and PD.
    TrainPair(Common),
    /// Sweep activations over the beta grid against a ReLU baseline.
    Sweep(Common),
    /// Sample the loss of a random network over its inputs.
    Landscape(Common),
    /// Compare a k-component ensemble pair with a single-net pair.
    Ensemble(Common),
}

fn load(common: &Common, landscape_cmd: bool) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(a) = &common.activation {
        let key = if landscape_cmd { "landscape.activation" } else { "model.activation" };
        cfg.set(key, a)?;
    }
    if let Some(seed) = common.seed {
        let key = if landscape_cmd { "landscape.seed" } else { "data.seed" };
        cfg.set(key, &seed.to_string())?;
    }
    if let Some(out) = &common.out {
        cfg.output_path = Some(out.clone());
    }
    if let Some(f) = &common.format {
        cfg.set("output.format", f)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn render<T: serde::Serialize>(
    cfg: &ExperimentConfig,
    command: &str,
    result: &T,
    csv: impl FnOnce() -> Result<String>,
) -> Result<String> {
    match cfg.output_format {
        OutputFormat::Csv => csv(),
        OutputFormat::Json => emit::to_json(cfg, command, result),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(c) => {
            let cfg = load(&c, false)?;
            let path = cfg
                .output_path
                .clone()
                .ok_or_else(|| Error::Config("gen needs --out or output.path".into()))?;
            let mut header: BTreeMap<String, String> = cfg.data.to_key_values().into_iter().collect();
            header.insert("config_hash".into(), cfg.hash());
            data::write_examples(&path, &header, data::Generator::new(&cfg.data)?)
        }
        Command::TrainPair(c) => {
            let cfg = load(&c, false)?;
            let pair = train::train_pair(&cfg, &cfg.model.activation, 0)?;
            let text = render(&cfg, "train-pair", &pair, || emit::pair_csv(&cfg, &pair))?;
            emit::write_output(cfg.output_path.as_deref(), &text)
        }
        Command::Sweep(c) => {
            let cfg = load(&c, false)?;
            let report = sweep::beta_sweep(&cfg)?;
            let text = render(&cfg, "sweep", &report, || Ok(emit::sweep_csv(&cfg, &report)))?;
            emit::write_output(cfg.output_path.as_deref(), &text)?;
            // rows that finished are written before reporting a failed cell
            match report.failures.first() {
                Some(f) if f.divergence => Err(Error::Divergence {
                    step: 0,
                    detail: format!("{} {} rep {}: {}", f.activation, f.params, f.rep, f.error),
                }),
                Some(f) => Err(Error::InvalidInput(f.error.clone())),
                None => Ok(()),
            }
        }
        Command::Landscape(c) => {
            let cfg = load(&c, true)?;
            let sample = landscape::landscape(&cfg.landscape)?;
            let text = render(&cfg, "landscape", &sample, || Ok(emit::landscape_csv(&cfg, &sample)))?;
            emit::write_output(cfg.output_path.as_deref(), &text)
        }
        Command::Ensemble(c) => {
            let cfg = load(&c, false)?;
            let report = ensemble::ensemble_baseline(&cfg, cfg.experiment.ensemble_k)?;
            let text = render(&cfg, "ensemble", &report, || Ok(emit::ensemble_csv(&cfg, &report)))?;
            emit::write_output(cfg.output_path.as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
