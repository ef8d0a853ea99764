//! Accuracy and reproducibility metrics.
//!
//! `relative_pd` is the mean over examples of `2|p1 - p2| / (p1 + p2)`.
//! `auc_loss` is the fraction of (positive, negative) pairs ranked in the
//! wrong order, i.e. one minus AUC under the strict-inequality convention.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Predictions of two duplicate models on the same example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionPair {
    pub id: u64,
    pub first: f64,
    pub second: f64,
}

impl PredictionPair {
    pub fn new(id: u64, first: f64, second: f64) -> Self {
        Self { id, first, second }
    }
}

/// Relative prediction difference averaged over all pairs.
pub fn relative_pd(pairs: &[PredictionPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("relative PD of an empty set".into()));
    }
    let mut total = 0.0;
    for p in pairs {
        if !(p.first > 0.0 && p.second > 0.0) {
            return Err(Error::InvalidInput(format!(
                "predictions must be positive (example {}: {}, {})",
                p.id, p.first, p.second
            )));
        }
        total += 2.0 * (p.first - p.second).abs() / (p.first + p.second);
    }
    Ok(total / pairs.len() as f64)
}

/// How equal scores of a positive and a negative are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// A tie is not a mis-ordering.
    #[default]
    Strict,
    /// A tie counts as half a mis-ordering, matching ROC-AUC tooling.
    Half,
}

/// AUC ranking loss with strict ties.
pub fn auc_loss(preds: &[(f64, bool)]) -> Result<f64> {
    auc_loss_with(preds, TieRule::Strict)
}

/// AUC ranking loss: fraction of positive/negative pairs where the negative
/// scores above the positive. `O(n log n)`.
pub fn auc_loss_with(preds: &[(f64, bool)], ties: TieRule) -> Result<f64> {
    let mut negatives: Vec<f64> = preds.iter().filter(|p| !p.1).map(|p| p.0).collect();
    let n_pos = preds.len() - negatives.len();
    if n_pos == 0 || negatives.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "AUC loss needs both classes ({n_pos} positives, {} negatives)",
            negatives.len()
        )));
    }
    if preds.iter().any(|p| p.0.is_nan()) {
        return Err(Error::InvalidInput("NaN prediction".into()));
    }
    negatives.sort_by(f64::total_cmp);
    let n_neg = negatives.len();
    // counts are integers; halves are tracked by doubling
    let mut doubled: u64 = 0;
    for &(score, _) in preds.iter().filter(|p| p.1) {
        let at_most = negatives.partition_point(|&n| n <= score);
        let above = (n_neg - at_most) as u64;
        doubled += 2 * above;
        if ties == TieRule::Half {
            let below = negatives.partition_point(|&n| n < score);
            doubled += (at_most - below) as u64;
        }
    }
    Ok(doubled as f64 / 2.0 / (n_pos as f64 * n_neg as f64))
}

/// Per-query AUC loss: the unweighted mean of [`auc_loss`] over queries that
/// contain both a positive and a negative example.
pub fn pq_auc(preds: &[(u64, f64, bool)]) -> Result<f64> {
    pq_auc_with(preds, TieRule::Strict)
}

pub fn pq_auc_with(preds: &[(u64, f64, bool)], ties: TieRule) -> Result<f64> {
    let mut by_query: BTreeMap<u64, Vec<(f64, bool)>> = BTreeMap::new();
    for &(q, p, y) in preds {
        by_query.entry(q).or_default().push((p, y));
    }
    let mut total = 0.0;
    let mut eligible = 0usize;
    for group in by_query.values() {
        let pos = group.iter().filter(|p| p.1).count();
        if pos == 0 || pos == group.len() {
            continue;
        }
        total += auc_loss_with(group, ties)?;
        eligible += 1;
    }
    if eligible == 0 {
        return Err(Error::UndefinedMetric(
            "no query contains both a positive and a negative".into(),
        ));
    }
    Ok(total / eligible as f64)
}

/// Probabilities are clamped to `[1e-15, 1 - 1e-15]`.
pub fn log_loss(p: f64, label: bool) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Finalized progressive-validation metrics. Ranking metrics are `None`
/// when undefined for the stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProgressiveMetrics {
    pub examples: usize,
    pub log_loss: f64,
    pub auc_loss: Option<f64>,
    pub pq_auc_loss: Option<f64>,
}

/// Streams (prediction, label, query) records, each scored before the model
/// trains on it.
#[derive(Debug, Clone, Default)]
pub struct ProgressiveAccumulator {
    log_loss_sum: f64,
    records: Vec<(u64, f64, bool)>,
}

impl ProgressiveAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            log_loss_sum: 0.0,
            records: Vec::with_capacity(n),
        }
    }

    pub fn update(&mut self, prediction: f64, label: bool, query: u64) {
        self.log_loss_sum += log_loss(prediction, label);
        self.records.push((query, prediction, label));
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(u64, f64, bool)] {
        &self.records
    }

    pub fn finalize(&self) -> ProgressiveMetrics {
        let n = self.records.len();
        let flat: Vec<(f64, bool)> = self.records.iter().map(|r| (r.1, r.2)).collect();
        ProgressiveMetrics {
            examples: n,
            log_loss: if n == 0 {
                f64::NAN
            } else {
                self.log_loss_sum / n as f64
            },
            auc_loss: auc_loss(&flat).ok(),
            pq_auc_loss: pq_auc(&self.records).ok(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(preds: &[(f64, bool)]) -> f64 {
        let mut wrong = 0u64;
        let mut pairs = 0u64;
        for t in preds.iter().filter(|p| p.1) {
            for tau in preds.iter().filter(|p| !p.1) {
                pairs += 1;
                if tau.0 > t.0 {
                    wrong += 1;
                }
            }
        }
        wrong as f64 / pairs as f64
    }

    #[test]
    fn pd_examples() {
        let same = [PredictionPair::new(0, 0.3, 0.3), PredictionPair::new(1, 0.9, 0.9)];
        assert_eq!(relative_pd(&same).unwrap(), 0.0);
        let one = relative_pd(&[PredictionPair::new(0, 0.1, 0.2)]).unwrap();
        assert!((one - 2.0 / 3.0).abs() < 1e-15);
        let swapped = relative_pd(&[PredictionPair::new(0, 0.2, 0.1)]).unwrap();
        assert_eq!(one, swapped);
        assert!(relative_pd(&[]).is_err());
    }

    #[test]
    fn auc_examples() {
        let p = [(0.9, true), (0.1, false), (0.95, false)];
        assert_eq!(auc_loss(&p).unwrap(), 0.5);
        let separated = [(0.9, true), (0.8, true), (0.1, false), (0.2, false)];
        assert_eq!(auc_loss(&separated).unwrap(), 0.0);
        let tied = [(0.5, true), (0.5, false), (0.5, true)];
        assert_eq!(auc_loss(&tied).unwrap(), 0.0);
        assert_eq!(auc_loss_with(&tied, TieRule::Half).unwrap(), 0.5);
        assert!(matches!(
            auc_loss(&[(0.1, true), (0.2, true)]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn sorted_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 1000 {
            let n = rng.gen_range(2..=50);
            // coarse scores so that ties occur
            let preds: Vec<(f64, bool)> = (0..n)
                .map(|_| (rng.gen_range(0..20) as f64 / 20.0, rng.gen_bool(0.4)))
                .collect();
            let Ok(fast) = auc_loss(&preds) else { continue };
            assert_eq!(fast, brute_force(&preds));
            checked += 1;
        }
    }

    #[test]
    fn pq_auc_rules() {
        let single = [(1, 0.9, true), (1, 0.1, false), (1, 0.95, false)];
        assert_eq!(pq_auc(&single).unwrap(), 0.5);
        let two = [
            (1, 0.9, true),
            (1, 0.1, false),
            (2, 0.9, true),
            (2, 0.1, false),
            (2, 0.95, false),
        ];
        assert_eq!(pq_auc(&two).unwrap(), 0.25);
        let with_ineligible = [
            (1, 0.9, true),
            (1, 0.1, false),
            (3, 0.01, true),
            (3, 0.02, true),
        ];
        assert_eq!(pq_auc(&with_ineligible).unwrap(), 0.0);
        assert!(pq_auc(&[(3, 0.01, true)]).is_err());
    }

    #[test]
    fn progressive_examples() {
        let mut acc = ProgressiveAccumulator::new();
        for i in 0..10 {
            acc.update(0.5, i % 3 == 0, i);
        }
        let m = acc.finalize();
        assert!((m.log_loss - std::f64::consts::LN_2).abs() < 1e-15);

        let mut one = ProgressiveAccumulator::new();
        one.update(0.9, true, 0);
        let m = one.finalize();
        assert!((m.log_loss + 0.9f64.ln()).abs() < 1e-15);
        assert_eq!(m.auc_loss, None);
    }

    #[test]
    fn progressive_matches_batch_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut acc = ProgressiveAccumulator::new();
        let mut stored = Vec::new();
        for _ in 0..500 {
            let q = rng.gen_range(0..40);
            let p: f64 = rng.gen_range(0.01..0.99);
            let y = rng.gen_bool(p);
            acc.update(p, y, q);
            stored.push((q, p, y));
        }
        let m = acc.finalize();
        let ll: f64 = stored.iter().map(|r| log_loss(r.1, r.2)).sum::<f64>() / 500.0;
        assert!((m.log_loss - ll).abs() < 1e-12);
        let flat: Vec<_> = stored.iter().map(|r| (r.1, r.2)).collect();
        assert_eq!(m.auc_loss.unwrap(), brute_force(&flat));
        assert_eq!(m.pq_auc_loss.unwrap(), pq_auc(&stored).unwrap());
    }

    proptest! {
        #[test]
        fn pd_bounded_and_symmetric(v in prop::collection::vec((1e-6f64..1.0, 1e-6f64..1.0), 1..40)) {
            let pairs: Vec<_> = v.iter().enumerate().map(|(i, p)| PredictionPair::new(i as u64, p.0, p.1)).collect();
            let swapped: Vec<_> = v.iter().enumerate().map(|(i, p)| PredictionPair::new(i as u64, p.1, p.0)).collect();
            let pd = relative_pd(&pairs).unwrap();
            prop_assert!((0.0..=2.0).contains(&pd));
            prop_assert_eq!(pd, relative_pd(&swapped).unwrap());
        }

        #[test]
        fn auc_invariant_under_monotone_transform(v in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..50)) {
            prop_assume!(v.iter().any(|p| p.1) && v.iter().any(|p| !p.1));
            let base = auc_loss(&v).unwrap();
            prop_assert!((0.0..=1.0).contains(&base));
            prop_assert_eq!(base, brute_force(&v));
            let mapped: Vec<_> = v.iter().map(|p| ((3.0 * p.0).exp() - 0.5, p.1)).collect();
            prop_assert_eq!(base, auc_loss(&mapped).unwrap());
        }
    }
}
