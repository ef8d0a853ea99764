//! Trains one sparse-input network with AdaGrad on a synthetic stream,
//! reports progressive metrics and writes a checkpoint.
//!
//!     cargo run --release --example train_model [checkpoint.json]

use smelu_repro::activations::ActivationSpec;
use smelu_repro::data::{Generator, SynthConfig};
use smelu_repro::metrics::ProgressiveAccumulator;
use smelu_repro::net::{save_checkpoint, Model, ModelConfig, Norm, TableSpec, Workspace};
use smelu_repro::optim::{OptimConfig, Optimizer};

fn main() -> smelu_repro::Result<()> {
    let synth = SynthConfig {
        queries: 5_000,
        ..SynthConfig::default()
    };
    let tables = (0..synth.tables)
        .map(|t| TableSpec {
            vocab: synth.vocab(t),
            dim: 8,
        })
        .collect();
    let config = ModelConfig::uniform(
        tables,
        vec![64, 32, 16],
        ActivationSpec::smelu(1.0)?,
        Norm::Weight { v: 1.0 },
        Some(6.0),
        7,
    );
    let mut model = Model::new(config)?;
    let mut opt = Optimizer::new(OptimConfig::default(), &model)?;
    println!("{} parameters", model.num_params());

    let mut ws = Workspace::default();
    let mut acc = ProgressiveAccumulator::new();
    for (step, example) in Generator::new(&synth)?.enumerate() {
        // score before training on the example
        let p = model.forward_backward(&example, &mut ws);
        acc.update(p, example.label, example.query);
        opt.step(&mut model, &ws.grads)?;
        if (step + 1) % 10_000 == 0 {
            let m = acc.finalize();
            println!("{:>6} examples  log loss {:.4}", m.examples, m.log_loss);
        }
    }
    let m = acc.finalize();
    println!(
        "final: log loss {:.4}, AUC loss {:.4}, PQAUC loss {:.4}",
        m.log_loss,
        m.auc_loss.unwrap_or(f64::NAN),
        m.pq_auc_loss.unwrap_or(f64::NAN)
    );

    if let Some(path) = std::env::args().nth(1) {
        save_checkpoint(path.as_ref(), &model, Some(&opt))?;
        println!("checkpoint written to {path}");
    }
    Ok(())
}
