//! Compares pairs of 3-component ensembles with pairs of single networks
//! of the same total parameter count.
//!
//!     cargo run --release --example ensemble_baseline

use smelu_repro::harness::{ensemble_baseline, ExperimentConfig};

fn main() -> smelu_repro::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.set("data.queries", "5000")?;
    cfg.set("experiment.repetitions", "3")?;
    let r = ensemble_baseline(&cfg, 3)?;
    println!(
        "components: embed dim {}, hidden {:?}, {} params each ({} total vs {})",
        r.shape.embed_dim, r.shape.hidden, r.shape.component_params, r.shape.ensemble_params, r.shape.single_params
    );
    for row in &r.rows {
        println!(
            "rep {}: PD single {:.2}% ensemble {:.2}%, log loss single {:.4} ensemble {:.4}",
            row.rep,
            100.0 * row.single_pd,
            100.0 * row.ensemble_pd,
            row.single_logloss,
            row.ensemble_logloss
        );
    }
    println!(
        "mean PD single {:.2}% ± {:.2}, ensemble {:.2}% ± {:.2}",
        100.0 * r.single_pd.mean,
        100.0 * r.single_pd.half_width,
        100.0 * r.ensemble_pd.mean,
        100.0 * r.ensemble_pd.half_width
    );
    Ok(())
}
