//! Sweeps SmeLU and Softplus over a small beta grid against the ReLU
//! baseline and prints the CSV report.
//!
//!     cargo run --release --example beta_sweep

use smelu_repro::harness::{beta_sweep, emit, ExperimentConfig};

fn main() -> smelu_repro::Result<()> {
    let cfg = ExperimentConfig::from_text(
        "data.queries = 5000\n\
         experiment.grid = 0.25, 1, 4\n\
         experiment.activations = smelu, softplus\n\
         experiment.repetitions = 2\n",
    )?;
    let report = beta_sweep(&cfg)?;
    print!("{}", emit::sweep_csv(&cfg, &report));
    Ok(())
}
