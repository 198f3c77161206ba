//! Pairwise precision, recall and F-measure against planted groups.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "precision={:.4} recall={:.4} f1={:.4} tp={} fp={} fn={}",
            self.precision, self.recall, self.f1, self.tp, self.fp, self.fn_
        )
    }
}

impl Metrics {
    /// Metrics from pair counts; a ratio with an empty denominator is 1.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Compares same-group decisions over all unordered record pairs. Both
/// maps must cover the same ids.
pub fn evaluate(
    predicted: &BTreeMap<String, String>,
    gold: &BTreeMap<String, String>,
) -> Result<Metrics> {
    let mut missing: Vec<String> = predicted
        .keys()
        .filter(|id| !gold.contains_key(*id))
        .cloned()
        .collect();
    missing.extend(
        gold.keys()
            .filter(|id| !predicted.contains_key(*id))
            .cloned(),
    );
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::IdMismatch(missing));
    }
    let mut cells: HashMap<(&str, &str), u64> = HashMap::new();
    let mut pred_sizes: HashMap<&str, u64> = HashMap::new();
    let mut gold_sizes: HashMap<&str, u64> = HashMap::new();
    for (id, p) in predicted {
        let g = gold[id].as_str();
        *cells.entry((p.as_str(), g)).or_default() += 1;
        *pred_sizes.entry(p.as_str()).or_default() += 1;
        *gold_sizes.entry(g).or_default() += 1;
    }
    let tp: u64 = cells.values().map(|&n| pairs(n)).sum();
    let predicted_pairs: u64 = pred_sizes.values().map(|&n| pairs(n)).sum();
    let gold_pairs: u64 = gold_sizes.values().map(|&n| pairs(n)).sum();
    Ok(Metrics::from_counts(
        tp,
        predicted_pairs - tp,
        gold_pairs - tp,
    ))
}
