//! Scans the loss of random frozen networks along one input and counts
//! strict local minima for ReLU and two SmeLU widths.
//!
//!     cargo run --release --example loss_landscape

use smelu_repro::activations::ActivationSpec;
use smelu_repro::harness::stats::median;
use smelu_repro::harness::{landscape, LandscapeConfig, LandscapeRegime};

fn main() -> smelu_repro::Result<()> {
    for regime in [LandscapeRegime::WeightNorm, LandscapeRegime::LayerNorm] {
        println!("{regime:?}");
        for act in ["relu", "smelu:beta=0.1", "smelu:beta=1"] {
            let activation: ActivationSpec = act.parse()?;
            let mut counts = Vec::new();
            for seed in 0..10 {
                let cfg = LandscapeConfig {
                    activation: activation.clone(),
                    regime,
                    seed,
                    ..LandscapeConfig::default()
                };
                counts.push(landscape(&cfg)?.strict_minima() as f64);
            }
            println!("  {act:<16} median strict minima {}", median(&counts));
        }
    }
    Ok(())
}
