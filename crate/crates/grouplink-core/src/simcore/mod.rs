//! String similarity, value-weight signatures and the element-to-cluster
//! similarity used by the clustering stage.

mod string;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Record, Schema};

pub use string::{jaro_sim, string_sim};

/// Tunables of the element-to-cluster similarity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityParams {
    /// Probability that a shared dominant value is real evidence.
    pub p: f64,
    /// `sim_s` threshold above which multi-value evidence counts.
    pub theta_th: f64,
    pub w_c: f64,
    pub w_o: f64,
    pub w_m: f64,
    /// Multiplier for the weights of values found in a single cluster.
    pub distinct_boost: f64,
    /// Two multi-value strings are the same value at or above this similarity.
    pub value_match_threshold: f64,
    /// Two dominant values are the same value at or above this similarity.
    /// 1.0 means exact equality.
    pub dominant_match_threshold: f64,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        SimilarityParams {
            p: 0.8,
            theta_th: 0.6,
            w_c: 1.0,
            w_o: 1.0,
            w_m: 0.1,
            distinct_boost: 1.5,
            value_match_threshold: 0.9,
            dominant_match_threshold: 1.0,
        }
    }
}

impl SimilarityParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::Config(format!(
                "p must lie in (0, 1], got {}",
                self.p
            )));
        }
        unit("theta_th", self.theta_th)?;
        unit("value_match_threshold", self.value_match_threshold)?;
        unit("dominant_match_threshold", self.dominant_match_threshold)?;
        for (name, w) in [("w_c", self.w_c), ("w_o", self.w_o), ("w_m", self.w_m)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be a non-negative number, got {w}"
                )));
            }
        }
        if self.w_c + self.w_o <= 0.0 {
            return Err(Error::Config("w_c + w_o must be positive".into()));
        }
        if !(self.distinct_boost >= 1.0 && self.distinct_boost.is_finite()) {
            return Err(Error::Config(format!(
                "distinct_boost must be >= 1, got {}",
                self.distinct_boost
            )));
        }
        Ok(())
    }
}

/// Value counts over a record set. The weight of a value is the fraction of
/// member records that carry it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    counts: Vec<BTreeMap<String, u32>>,
    record_count: u32,
}

impl Signature {
    pub fn empty(attributes: usize) -> Self {
        Signature {
            counts: vec![BTreeMap::new(); attributes],
            record_count: 0,
        }
    }

    pub fn from_record(record: &Record) -> Self {
        let counts = record
            .values
            .iter()
            .map(|set| set.iter().map(|v| (v.clone(), 1)).collect())
            .collect();
        Signature {
            counts,
            record_count: 1,
        }
    }

    /// Signature over `records`; fails on an empty set.
    pub fn build<'a>(
        records: impl IntoIterator<Item = &'a Record>,
        schema: &Schema,
    ) -> Result<Self> {
        let mut sig = Signature::empty(schema.len());
        for r in records {
            sig.absorb(&Signature::from_record(r));
        }
        if sig.record_count == 0 {
            return Err(Error::EmptySignature);
        }
        Ok(sig)
    }

    /// Builds a signature from explicit per-attribute counts.
    pub fn from_counts(counts: Vec<BTreeMap<String, u32>>, record_count: u32) -> Self {
        Signature {
            counts,
            record_count,
        }
    }

    pub fn record_count(&self) -> u32 {
        self.record_count
    }

    pub fn attributes(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, attr: usize, value: &str) -> u32 {
        self.counts[attr].get(value).copied().unwrap_or(0)
    }

    pub fn weight(&self, attr: usize, value: &str) -> f64 {
        if self.record_count == 0 {
            0.0
        } else {
            self.count(attr, value) as f64 / self.record_count as f64
        }
    }

    /// `(value, weight)` pairs of one attribute in value order.
    pub fn weights(&self, attr: usize) -> impl Iterator<Item = (&str, f64)> + '_ {
        let n = self.record_count.max(1) as f64;
        self.counts[attr]
            .iter()
            .map(move |(v, &c)| (v.as_str(), c as f64 / n))
    }

    pub fn values(&self, attr: usize) -> impl Iterator<Item = &str> + '_ {
        self.counts[attr].keys().map(String::as_str)
    }

    pub fn absorb(&mut self, other: &Signature) {
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), BTreeMap::new());
        }
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (v, &c) in theirs {
                *mine.entry(v.clone()).or_insert(0) += c;
            }
        }
        self.record_count += other.record_count;
    }

    /// Removes the records summarized by `other`, which must be a subset.
    pub fn remove(&mut self, other: &Signature) {
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (v, &c) in theirs {
                if let Some(slot) = mine.get_mut(v) {
                    *slot = slot.saturating_sub(c);
                    if *slot == 0 {
                        mine.remove(v);
                    }
                }
            }
        }
        self.record_count = self.record_count.saturating_sub(other.record_count);
    }
}

/// A signature, optionally with a subset of its records taken out. Lets a
/// cluster be compared with one of its own elements without copying.
#[derive(Clone, Copy, Debug)]
pub struct SigView<'a> {
    base: &'a Signature,
    minus: Option<&'a Signature>,
}

impl<'a> SigView<'a> {
    pub fn without(base: &'a Signature, minus: &'a Signature) -> Self {
        SigView {
            base,
            minus: Some(minus),
        }
    }

    pub fn record_count(&self) -> u32 {
        self.base.record_count - self.minus.map_or(0, |m| m.record_count)
    }

    fn count(&self, attr: usize, value: &str) -> u32 {
        self.base.count(attr, value) - self.minus.map_or(0, |m| m.count(attr, value))
    }

    fn weight(&self, attr: usize, value: &str) -> f64 {
        match self.record_count() {
            0 => 0.0,
            n => self.count(attr, value) as f64 / n as f64,
        }
    }

    fn weights(&self, attr: usize) -> impl Iterator<Item = (&'a str, f64)> + '_ {
        let n = self.record_count().max(1) as f64;
        let minus = self.minus;
        self.base.counts[attr].iter().filter_map(move |(v, &c)| {
            let c = c - minus.map_or(0, |m| m.count(attr, v));
            (c > 0).then(|| (v.as_str(), c as f64 / n))
        })
    }

    fn has_values(&self, attr: usize) -> bool {
        self.weights(attr).next().is_some()
    }
}

impl<'a> From<&'a Signature> for SigView<'a> {
    fn from(base: &'a Signature) -> Self {
        SigView { base, minus: None }
    }
}

/// Number of current clusters holding each value; a value held by exactly
/// one cluster is distinct.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValueDistinctness {
    holders: Vec<HashMap<String, u32>>,
}

impl ValueDistinctness {
    pub fn new(attributes: usize) -> Self {
        ValueDistinctness {
            holders: vec![HashMap::new(); attributes],
        }
    }

    /// Computes distinctness from scratch over cluster signatures.
    pub fn from_clusters<'a>(
        attributes: usize,
        clusters: impl IntoIterator<Item = &'a Signature>,
    ) -> Self {
        let mut d = ValueDistinctness::new(attributes);
        for sig in clusters {
            d.add_cluster(sig);
        }
        d
    }

    pub fn add_cluster(&mut self, sig: &Signature) {
        for (attr, counts) in sig.counts.iter().enumerate() {
            for v in counts.keys() {
                *self.holders[attr].entry(v.clone()).or_insert(0) += 1;
            }
        }
    }

    pub fn remove_cluster(&mut self, sig: &Signature) {
        for (attr, counts) in sig.counts.iter().enumerate() {
            for v in counts.keys() {
                if let Some(n) = self.holders[attr].get_mut(v.as_str()) {
                    *n -= 1;
                    if *n == 0 {
                        self.holders[attr].remove(v.as_str());
                    }
                }
            }
        }
    }

    pub fn holders(&self, attr: usize, value: &str) -> u32 {
        self.holders
            .get(attr)
            .and_then(|m| m.get(value))
            .copied()
            .unwrap_or(0)
    }

    pub fn is_distinct(&self, attr: usize, value: &str) -> bool {
        self.holders(attr, value) == 1
    }
}

/// Weight lookup with the distinct-value boost applied.
#[derive(Clone, Copy)]
struct Boost<'a> {
    distinctness: Option<&'a ValueDistinctness>,
    factor: f64,
}

impl Boost<'_> {
    const NONE: Boost<'static> = Boost {
        distinctness: None,
        factor: 1.0,
    };

    fn apply(&self, attr: usize, value: &str, w: f64) -> f64 {
        match self.distinctness {
            Some(d) if d.is_distinct(attr, value) => (w * self.factor).min(1.0),
            _ => w,
        }
    }
}

/// Pooled dominant-value similarity:
/// `1 - prod(1 - p * w_e(v) * w_cl(v') * s(v, v'))` over cross pairs of the
/// same attribute.
pub fn sim_dom<'a, 'b>(
    e: impl Into<SigView<'a>>,
    cl: impl Into<SigView<'b>>,
    schema: &Schema,
    params: &SimilarityParams,
) -> f64 {
    sim_dom_boosted(e.into(), cl.into(), schema, params, Boost::NONE)
}

fn sim_dom_boosted(
    e: SigView,
    cl: SigView,
    schema: &Schema,
    params: &SimilarityParams,
    boost: Boost,
) -> f64 {
    let exact = params.dominant_match_threshold >= 1.0;
    let mut keep = 1.0;
    for &attr in schema.dominant() {
        for (v, we) in e.weights(attr) {
            let we = boost.apply(attr, v, we);
            if exact {
                let wc = cl.weight(attr, v);
                if wc > 0.0 {
                    keep *= 1.0 - params.p * we * boost.apply(attr, v, wc);
                }
            } else {
                for (v2, wc) in cl.weights(attr) {
                    let s = string_sim(v, v2);
                    if s >= params.dominant_match_threshold {
                        keep *= 1.0 - params.p * we * boost.apply(attr, v2, wc) * s;
                    }
                }
            }
        }
    }
    (1.0 - keep).clamp(0.0, 1.0)
}

/// Common-value similarity: per attribute, the best `string_sim * w_cl` over
/// value pairs, averaged over common-value attributes.
pub fn sim_com<'a, 'b>(
    e: impl Into<SigView<'a>>,
    cl: impl Into<SigView<'b>>,
    schema: &Schema,
) -> f64 {
    sim_com_boosted(e.into(), cl.into(), schema, Boost::NONE)
}

fn sim_com_boosted(e: SigView, cl: SigView, schema: &Schema, boost: Boost) -> f64 {
    let attrs = schema.common();
    if attrs.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for &attr in attrs {
        total += match (e.has_values(attr), cl.has_values(attr)) {
            (false, false) => 1.0,
            (true, true) => {
                let mut best: f64 = 0.0;
                for (v, _) in e.weights(attr) {
                    for (v2, wc) in cl.weights(attr) {
                        best = best.max(string_sim(v, v2) * boost.apply(attr, v2, wc));
                    }
                }
                best
            }
            _ => 0.0,
        };
    }
    total / attrs.len() as f64
}

/// Multi-value similarity: per attribute, the Jaccard overlap of the two
/// value sets where values match at `value_match_threshold`, averaged over
/// multi-value attributes.
pub fn sim_multi<'a, 'b>(
    e: impl Into<SigView<'a>>,
    cl: impl Into<SigView<'b>>,
    schema: &Schema,
    params: &SimilarityParams,
) -> f64 {
    let (e, cl) = (e.into(), cl.into());
    let attrs = schema.multi();
    if attrs.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for &attr in attrs {
        let a: Vec<&str> = e.weights(attr).map(|(v, _)| v).collect();
        let b: Vec<&str> = cl.weights(attr).map(|(v, _)| v).collect();
        if a.is_empty() && b.is_empty() {
            continue;
        }
        let matches = |x: &str, ys: &[&str]| {
            ys.iter()
                .any(|y| x == *y || string_sim(x, y) >= params.value_match_threshold)
        };
        let hit_a = a.iter().filter(|x| matches(x, &b)).count();
        let hit_b = b.iter().filter(|y| matches(y, &a)).count();
        let inter = hit_a.min(hit_b);
        total += inter as f64 / (a.len() + b.len() - inter) as f64;
    }
    total / attrs.len() as f64
}

/// Element-to-cluster similarity combining the three attribute classes.
///
/// Weights of values held by a single cluster (per `distinctness`) are
/// multiplied by `distinct_boost` and capped at 1 before combining.
pub fn element_cluster_sim<'a, 'b>(
    e: impl Into<SigView<'a>>,
    cl: impl Into<SigView<'b>>,
    distinctness: Option<&ValueDistinctness>,
    schema: &Schema,
    params: &SimilarityParams,
) -> f64 {
    let (e, cl) = (e.into(), cl.into());
    let boost = Boost {
        distinctness,
        factor: params.distinct_boost,
    };
    let com = sim_com_boosted(e, cl, schema, boost);
    let dom = sim_dom_boosted(e, cl, schema, params, boost);
    let sim_s = (params.w_c * com + params.w_o * dom) / (params.w_c + params.w_o);
    let multi = if sim_s >= params.theta_th && params.w_m > 0.0 {
        sim_multi(e, cl, schema, params)
    } else {
        0.0
    };
    combine(sim_s, multi, params)
}

/// `min(1, sim_s + tau * w_m * multi)` with `tau = [sim_s >= theta_th]`.
pub fn combine(sim_s: f64, multi: f64, params: &SimilarityParams) -> f64 {
    let tau = if sim_s >= params.theta_th { 1.0 } else { 0.0 };
    (sim_s + tau * params.w_m * multi).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests;
