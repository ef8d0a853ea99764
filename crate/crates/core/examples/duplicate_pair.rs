//! Trains two duplicate models that differ only in data order, for ReLU and
//! for SmeLU, and compares their prediction difference.
//!
//!     cargo run --release --example duplicate_pair

use smelu_repro::activations::ActivationSpec;
use smelu_repro::harness::{train_pair, ExperimentConfig, NondetConfig};

fn main() -> smelu_repro::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.set("data.queries", "10000")?;

    for act in [ActivationSpec::Relu, ActivationSpec::smelu(1.0)?] {
        let pair = train_pair(&cfg, &act, 0)?;
        println!(
            "{:<14} PD {:>6.2}%  log loss {:.4}  PQAUC loss {:.4}",
            pair.activation,
            100.0 * pair.pd,
            pair.mean(|m| Some(m.log_loss)).unwrap(),
            pair.mean(|m| m.pq_auc_loss).unwrap_or(f64::NAN)
        );
    }

    // with every seed shared the two models are bit-identical
    cfg.nondet = NondetConfig::twins();
    let twins = train_pair(&cfg, &ActivationSpec::Relu, 0)?;
    println!("twins          PD {}", twins.pd);
    Ok(())
}
