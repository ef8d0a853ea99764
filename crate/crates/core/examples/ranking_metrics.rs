//! AUC loss, per-query AUC loss and relative PD on hand-made predictions.
//!
//!     cargo run --example ranking_metrics

use smelu_repro::metrics::{auc_loss, auc_loss_with, pq_auc, relative_pd, PredictionPair, TieRule};

fn main() -> smelu_repro::Result<()> {
    // (query, prediction, label)
    let records = [
        (1, 0.80, true),
        (1, 0.35, false),
        (1, 0.35, true),
        (2, 0.10, true),
        (2, 0.60, false),
        (3, 0.50, true),
    ];
    let flat: Vec<(f64, bool)> = records.iter().map(|r| (r.1, r.2)).collect();
    println!("AUC loss, ties free:     {:.4}", auc_loss(&flat)?);
    println!("AUC loss, ties half:     {:.4}", auc_loss_with(&flat, TieRule::Half)?);
    // query 3 has a single class and is skipped
    println!("per-query AUC loss:      {:.4}", pq_auc(&records)?);

    let other = [0.75, 0.40, 0.30, 0.12, 0.55, 0.52];
    let pairs: Vec<PredictionPair> = records
        .iter()
        .zip(other)
        .enumerate()
        .map(|(i, (r, q))| PredictionPair::new(i as u64, r.1, q))
        .collect();
    println!("relative PD:             {:.2}%", 100.0 * relative_pd(&pairs)?);
    Ok(())
}
