//! Parses a flat key = value config, applies overrides and prints the
//! canonical form with its hash.
//!
//!     cargo run --example config_file

use smelu_repro::harness::ExperimentConfig;

const TEXT: &str = "
# desk-scale run
model.hidden = 64, 32, 16
model.activation = smelu:beta=1
model.layer_activations = smelu:beta=2 | smelu:beta=1 | smelu:beta=0.5 | smelu:beta=0.5
data.queries = 20000
nondet.init = shared
nondet.shuffle = distinct
";

fn main() -> smelu_repro::Result<()> {
    let mut cfg = ExperimentConfig::from_text(TEXT)?;
    println!("hash before override: {}", cfg.hash());
    cfg.set("data.seed", "42")?;
    println!("hash after override:  {}", cfg.hash());
    print!("{}", cfg.to_text());

    match ExperimentConfig::from_text("model.widths = 64\nmodel.widths = 32") {
        Err(e) => println!("rejected: {e} (exit code {})", e.exit_code()),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
