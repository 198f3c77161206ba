//! Exhaustive reference implementations of k-robustness and k-cores,
//! straight from the definitions. Exponential; meant for small graphs in
//! tests.
//!
//! The oracle works on records: a node standing for several records is
//! expanded, and its records are adjacent to each other.

use crate::error::{Error, Result};
use crate::simgraph::SimilarityGraph;

/// Largest record count accepted by [`OracleGraph::is_k_robust`].
pub const ROBUST_BOUND: usize = 14;
/// Largest record count accepted by the partitioning enumeration.
pub const CORE_BOUND: usize = 10;
/// Largest record count accepted by [`OracleGraph::min_vertex_separator`].
pub const SEPARATOR_BOUND: usize = 12;

/// Record-level adjacency as bitmasks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleGraph {
    labels: Vec<String>,
    adj: Vec<u64>,
}

impl OracleGraph {
    pub fn from_graph(graph: &SimilarityGraph) -> Result<Self> {
        let n = graph.records().len();
        if n > 64 {
            return Err(Error::OracleBound {
                nodes: n,
                bound: 64,
            });
        }
        let mut adj = vec![0u64; n];
        let mut link = |members: Vec<usize>| {
            for &u in &members {
                for &v in &members {
                    if u != v {
                        adj[u] |= 1 << v;
                    }
                }
            }
        };
        for c in graph.cliques() {
            link(
                c.members
                    .iter()
                    .flat_map(|&m| graph.node_records(m).iter().copied())
                    .collect(),
            );
        }
        for node in 0..graph.node_count() {
            link(graph.node_records(node).to_vec());
        }
        Ok(OracleGraph {
            labels: graph.records().to_vec(),
            adj,
        })
    }

    /// The subgraph induced by the records with the given ids.
    pub fn induced<S: AsRef<str>>(&self, ids: &[S]) -> OracleGraph {
        let keep: Vec<usize> = (0..self.labels.len())
            .filter(|&i| ids.iter().any(|id| id.as_ref() == self.labels[i]))
            .collect();
        let adj = keep
            .iter()
            .map(|&i| {
                keep.iter()
                    .enumerate()
                    .filter(|&(_, &j)| self.adj[i] >> j & 1 == 1)
                    .fold(0u64, |m, (p, _)| m | 1 << p)
            })
            .collect();
        OracleGraph {
            labels: keep.iter().map(|&i| self.labels[i].clone()).collect(),
            adj,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn full(&self) -> u64 {
        if self.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        }
    }

    fn connected(&self, mask: u64) -> bool {
        if mask == 0 {
            return true;
        }
        let start = mask & mask.wrapping_neg();
        let (mut seen, mut frontier) = (start, start);
        while frontier != 0 {
            let u = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let next = self.adj[u] & mask & !seen;
            seen |= next;
            frontier |= next;
        }
        seen == mask
    }

    fn robust(&self, mask: u64, k: usize) -> bool {
        if !self.connected(mask) {
            return false;
        }
        let mut sub = mask;
        loop {
            if (sub.count_ones() as usize) <= k && !self.connected(mask & !sub) {
                return false;
            }
            if sub == 0 {
                return true;
            }
            sub = (sub - 1) & mask;
        }
    }

    /// Connected, and still connected after removing any `k` records.
    pub fn is_k_robust(&self, k: usize) -> Result<bool> {
        self.check(ROBUST_BOUND)?;
        Ok(self.robust(self.full(), k))
    }

    fn check(&self, bound: usize) -> Result<()> {
        if self.len() > bound {
            return Err(Error::OracleBound {
                nodes: self.len(),
                bound,
            });
        }
        Ok(())
    }

    /// Every maximal k-robust partitioning: parts are k-robust and no union
    /// of two or more parts is. Parts are id lists; both levels sorted.
    pub fn maximal_partitionings(&self, k: usize) -> Result<Vec<Vec<Vec<String>>>> {
        Ok(self
            .partition_masks(k)?
            .iter()
            .map(|p| self.named(p))
            .collect())
    }

    fn partition_masks(&self, k: usize) -> Result<Vec<Vec<u64>>> {
        self.check(CORE_BOUND)?;
        let size = 1usize << self.len();
        let robust: Vec<bool> = (0..size as u64)
            .map(|m| m != 0 && self.robust(m, k))
            .collect();
        let mut out = Vec::new();
        let mut blocks = Vec::new();
        enumerate(self.full(), &mut blocks, &robust, &mut out);
        Ok(out)
    }

    fn named(&self, parts: &[u64]) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = parts.iter().map(|&m| self.ids(m)).collect();
        out.sort();
        out
    }

    fn ids(&self, mask: u64) -> Vec<String> {
        let mut ids: Vec<String> = (0..self.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| self.labels[i].clone())
            .collect();
        ids.sort();
        ids
    }

    /// Classes of records that share a part in every maximal k-robust
    /// partitioning, keeping classes of two or more. Sorted.
    pub fn cores(&self, k: usize) -> Result<Vec<Vec<String>>> {
        let parts = self.partition_masks(k)?;
        let n = self.len();
        let mut together: Vec<u64> = vec![self.full(); n];
        for partitioning in &parts {
            for &block in partitioning {
                for (i, t) in together.iter_mut().enumerate() {
                    if block >> i & 1 == 1 {
                        *t &= block;
                    }
                }
            }
        }
        let mut seen = 0u64;
        let mut out = Vec::new();
        for (i, &class) in together.iter().enumerate().take(n) {
            if seen >> i & 1 == 1 {
                continue;
            }
            seen |= class;
            if class.count_ones() >= 2 {
                out.push(self.ids(class));
            }
        }
        out.sort();
        Ok(out)
    }

    /// Size of a smallest set of records whose removal disconnects `a` from
    /// `b`; `None` when they are adjacent (no separator exists).
    pub fn min_vertex_separator(&self, a: &str, b: &str) -> Result<Option<usize>> {
        self.check(SEPARATOR_BOUND)?;
        let pos = |id: &str| self.labels.iter().position(|l| l == id);
        let (a, b) = match (pos(a), pos(b)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::IdMismatch(vec![a.to_string(), b.to_string()])),
        };
        if self.adj[a] >> b & 1 == 1 {
            return Ok(None);
        }
        let others = self.full() & !(1 << a) & !(1 << b);
        let mut best: Option<usize> = None;
        let mut sub = others;
        loop {
            let size = sub.count_ones() as usize;
            if best.is_none_or(|b| size < b) && !self.linked(self.full() & !sub, a, b) {
                best = Some(size);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
        Ok(best)
    }

    fn linked(&self, mask: u64, a: usize, b: usize) -> bool {
        let (mut seen, mut frontier) = (1u64 << a, 1u64 << a);
        while frontier != 0 {
            let u = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let next = self.adj[u] & mask & !seen;
            seen |= next;
            frontier |= next;
        }
        seen >> b & 1 == 1
    }
}

/// Extends `blocks` to partitionings of `rest`. The lowest unplaced record
/// opens each new block; blocks that could merge with an earlier one are
/// pruned early, and the full merge check runs on complete partitionings.
fn enumerate(rest: u64, blocks: &mut Vec<u64>, robust: &[bool], out: &mut Vec<Vec<u64>>) {
    if rest == 0 {
        if is_maximal(blocks, robust) {
            out.push(blocks.clone());
        }
        return;
    }
    let low = rest & rest.wrapping_neg();
    let others = rest ^ low;
    let mut sub = others;
    loop {
        let block = sub | low;
        if robust[block as usize] && !blocks.iter().any(|&b| robust[(b | block) as usize]) {
            blocks.push(block);
            enumerate(rest ^ block, blocks, robust, out);
            blocks.pop();
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & others;
    }
}

fn is_maximal(blocks: &[u64], robust: &[bool]) -> bool {
    let n = blocks.len();
    (1usize..1 << n).filter(|s| s.count_ones() >= 2).all(|s| {
        let merged = (0..n)
            .filter(|&i| s >> i & 1 == 1)
            .fold(0u64, |m, i| m | blocks[i]);
        !robust[merged as usize]
    })
}

/// Whether the whole graph is k-robust; at most [`ROBUST_BOUND`] records.
pub fn brute_force_k_robust(graph: &SimilarityGraph, k: usize) -> Result<bool> {
    OracleGraph::from_graph(graph)?.is_k_robust(k)
}

/// The k-cores of the graph by definition; at most [`CORE_BOUND`] records.
pub fn brute_force_cores(graph: &SimilarityGraph, k: usize) -> Result<Vec<Vec<String>>> {
    OracleGraph::from_graph(graph)?.cores(k)
}
