//! End-to-end wiring: name blocking, per-block graph, cores and
//! clustering, plus evaluation, synthetic data and configuration.

mod config;
mod eval;
mod synth;
#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use rayon::prelude::*;

pub use config::{InputSection, LinkageConfig, LinkageParams, RunSection, SchemaSection};
pub use eval::{evaluate, Metrics};
pub use synth::{generate_synthetic, synth_schema, SizeDistribution, SynthSpec};

use crate::error::{Error, Result};
use crate::grouping::{assign_groups, build_elements, cluster_block, SignatureModel};
use crate::robustcore::{identify_cores, KCore};
use crate::schema::{Dataset, Record};
use crate::simgraph::{build_graph, name_classes, simplify, SimilarityGraph};

/// Record positions of each name block: the transitive closure of name
/// similarity at `threshold`. Blocks are sorted by their smallest id and
/// positions within a block by id.
fn block_positions(dataset: &Dataset, threshold: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by(|&a, &b| dataset.record(a).id.cmp(&dataset.record(b).id));
    let records: Vec<&Record> = order.iter().map(|&i| dataset.record(i)).collect();
    let classes = name_classes(&records, dataset.schema(), threshold);
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (&pos, &class) in order.iter().zip(&classes) {
        if class == blocks.len() {
            blocks.push(Vec::new());
        }
        blocks[class].push(pos);
    }
    blocks
}

/// Name blocks as id lists.
pub fn block_by_name(dataset: &Dataset, threshold: f64) -> Vec<Vec<String>> {
    block_positions(dataset, threshold)
        .into_iter()
        .map(|b| {
            b.into_iter()
                .map(|p| dataset.record(p).id.clone())
                .collect()
        })
        .collect()
}

/// One sub-dataset per name block.
pub fn blocks(dataset: &Dataset, threshold: f64) -> Vec<Dataset> {
    block_positions(dataset, threshold)
        .iter()
        .map(|b| dataset.subset(b))
        .collect()
}

/// Runs `f` over the blocks, in parallel when `threads > 1`. Output order
/// follows block order either way.
fn per_block<B, T, F>(blocks: &[B], threads: usize, f: F) -> Result<Vec<T>>
where
    B: Sync,
    T: Send,
    F: Fn(&B) -> Result<T> + Sync + Send,
{
    if threads <= 1 {
        return blocks.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| blocks.par_iter().map(f).collect())
}

/// The v-clique graph of every block, unsimplified.
pub fn block_graphs(
    dataset: &Dataset,
    params: &LinkageParams,
    threads: usize,
) -> Result<Vec<SimilarityGraph>> {
    per_block(
        &blocks(dataset, params.name_block_threshold),
        threads,
        |b| build_graph(b, params.name_edge_threshold),
    )
}

fn cores_of(block: &Dataset, params: &LinkageParams) -> Result<Vec<KCore>> {
    let graph = simplify(&build_graph(block, params.name_edge_threshold)?);
    Ok(identify_cores(&graph, params.k))
}

/// The k-cores of every block, sorted.
pub fn block_cores(
    dataset: &Dataset,
    params: &LinkageParams,
    threads: usize,
) -> Result<Vec<KCore>> {
    let per = per_block(
        &blocks(dataset, params.name_block_threshold),
        threads,
        |b| cores_of(b, params),
    )?;
    let mut all: Vec<KCore> = per.into_iter().flatten().collect();
    all.sort();
    Ok(all)
}

fn cluster_of(
    block: &Dataset,
    cores: &[KCore],
    params: &LinkageParams,
) -> Result<BTreeMap<String, String>> {
    let elements = build_elements(block, cores)?;
    let model = SignatureModel::new(&elements, block.schema(), &params.similarity);
    Ok(assign_groups(
        &elements,
        &cluster_block(&model, &params.grouping),
    ))
}

/// Record id to group id for the whole dataset.
pub fn run_linkage(
    dataset: &Dataset,
    params: &LinkageParams,
    threads: usize,
) -> Result<BTreeMap<String, String>> {
    let per = per_block(
        &blocks(dataset, params.name_block_threshold),
        threads,
        |b| cluster_of(b, &cores_of(b, params)?, params),
    )?;
    Ok(per.into_iter().flatten().collect())
}

/// Clustering stage alone, seeded with externally supplied cores. Every
/// core must lie inside one name block.
pub fn cluster_with_cores(
    dataset: &Dataset,
    cores: &[KCore],
    params: &LinkageParams,
    threads: usize,
) -> Result<BTreeMap<String, String>> {
    let blocks = blocks(dataset, params.name_block_threshold);
    let mut block_of: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, b) in blocks.iter().enumerate() {
        for r in b.records() {
            block_of.insert(r.id.as_str(), i);
        }
    }
    let mut assigned: Vec<Vec<KCore>> = vec![Vec::new(); blocks.len()];
    let mut unknown = BTreeSet::new();
    for core in cores {
        let homes: BTreeSet<usize> = core
            .records
            .iter()
            .filter_map(|id| {
                let home = block_of.get(id.as_str()).copied();
                if home.is_none() {
                    unknown.insert(id.clone());
                }
                home
            })
            .collect();
        match homes.len() {
            0 => {}
            1 => assigned[*homes.first().unwrap()].push(core.clone()),
            _ => return Err(Error::CoreSpansBlocks(core.id())),
        }
    }
    if !unknown.is_empty() {
        return Err(Error::IdMismatch(unknown.into_iter().collect()));
    }
    let indexed: Vec<(Dataset, Vec<KCore>)> = blocks.into_iter().zip(assigned).collect();
    let per = per_block(&indexed, threads, |(b, c)| cluster_of(b, c, params))?;
    Ok(per.into_iter().flatten().collect())
}

/// Reads a core dump (`core_id<TAB>k<TAB>ids`). The id column is ignored
/// and recomputed.
pub fn parse_cores<R: Read>(mut input: R) -> Result<Vec<KCore>> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<cores>", e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = i as u64 + 1;
        let bad = |message: &str| Error::MalformedRow {
            row,
            message: message.to_string(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [_, k, ids] = fields[..] else {
            return Err(bad("expected `core_id<TAB>k<TAB>ids`"));
        };
        let k = k
            .trim()
            .parse()
            .map_err(|_| bad("k is not a non-negative integer"))?;
        let mut records: Vec<String> = ids
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        records.sort();
        records.dedup();
        if records.len() < 2 {
            return Err(bad("a core needs at least two records"));
        }
        out.push(KCore { records, k });
    }
    Ok(out)
}
