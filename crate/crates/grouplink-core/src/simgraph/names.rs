//! Transitive name-equivalence classes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::unionfind::UnionFind;

use crate::schema::{Record, Schema};
use crate::simcore::string_sim;

/// Tokens held by more distinct names than this do not generate candidates.
const RARE_TOKEN_DF: usize = 16;

/// Length of the shared prefix that puts two names in the same candidate bucket.
const PREFIX_LEN: usize = 4;

/// Partitions `records` into classes whose common-value attributes are
/// similar at `threshold`, closed under transitivity.
///
/// Returns one class label per record; labels are dense and numbered in
/// order of first appearance. Identical keys are grouped by hashing; distinct
/// keys are compared only when they share a four-character prefix or a rare
/// token.
pub fn name_classes(records: &[&Record], schema: &Schema, threshold: f64) -> Vec<usize> {
    let common = schema.common();
    let mut keys: BTreeMap<Vec<&BTreeSet<String>>, usize> = BTreeMap::new();
    let mut key_of = Vec::with_capacity(records.len());
    for r in records {
        let key: Vec<&BTreeSet<String>> = common.iter().map(|&a| r.values(a)).collect();
        let next = keys.len();
        key_of.push(*keys.entry(key).or_insert(next));
    }
    let mut distinct: Vec<Vec<&BTreeSet<String>>> = vec![Vec::new(); keys.len()];
    for (k, id) in keys {
        distinct[id] = k;
    }

    let mut uf = UnionFind::<usize>::new(distinct.len());
    for bucket in candidate_buckets(&distinct) {
        for (i, &a) in bucket.iter().enumerate() {
            for &b in &bucket[i + 1..] {
                if !uf.equiv(a, b) && keys_similar(&distinct[a], &distinct[b], threshold) {
                    uf.union(a, b);
                }
            }
        }
    }

    let mut dense = HashMap::new();
    key_of
        .iter()
        .map(|&k| {
            let root = uf.find(k);
            let next = dense.len();
            *dense.entry(root).or_insert(next)
        })
        .collect()
}

fn candidate_buckets(keys: &[Vec<&BTreeSet<String>>]) -> Vec<Vec<usize>> {
    let mut prefixes: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    let mut tokens: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (id, key) in keys.iter().enumerate() {
        for value in key.iter().flat_map(|set| set.iter()) {
            let prefix: String = value.chars().take(PREFIX_LEN).collect();
            prefixes.entry(prefix).or_default().insert(id);
            for tok in value
                .split(|c: char| !c.is_alphanumeric())
                .filter(|t| !t.is_empty())
            {
                tokens.entry(tok).or_default().insert(id);
            }
        }
    }
    prefixes
        .into_values()
        .chain(
            tokens
                .into_values()
                .filter(|ids| ids.len() <= RARE_TOKEN_DF),
        )
        .filter(|ids| ids.len() > 1)
        .map(|ids| ids.into_iter().collect())
        .collect()
}

fn keys_similar(a: &[&BTreeSet<String>], b: &[&BTreeSet<String>], threshold: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| match (x.is_empty(), y.is_empty()) {
            (true, true) => true,
            (false, false) => x
                .iter()
                .any(|v| y.iter().any(|w| string_sim(v, w) >= threshold)),
            _ => false,
        })
}
