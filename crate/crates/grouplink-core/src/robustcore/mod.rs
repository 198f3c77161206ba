//! Stage one: robust k-cores.
//!
//! A k-core is a set of records that stay together in every maximal
//! partitioning of the graph into k-robust parts (parts that remain
//! connected after removing any k nodes). Cores are found with a work
//! queue: [`screen`] cheaply cuts pieces along v-unions whose border has at
//! most k records, and [`split`] checks the remaining pieces with max flow,
//! cutting them at a minimum separator when two v-unions are joined by at
//! most k vertex-disjoint paths.

pub mod flow;
pub mod oracle;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use petgraph::unionfind::UnionFind;
use sha2::{Digest, Sha256};

use crate::simgraph::{maximal_sets, SimilarityGraph};

pub use flow::{max_flow, FlowNetwork, FlowOutcome, FlowValue};

/// A piece of the similarity graph under examination.
///
/// Node ids are those of the graph the piece was cut from; each node keeps
/// the record positions it stands for. Separator-marked nodes are copies of
/// a cut shared with sibling pieces and never end up in a core.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgraph {
    nodes: BTreeMap<usize, Vec<usize>>,
    cliques: Vec<Vec<usize>>,
    separators: BTreeSet<usize>,
}

impl Subgraph {
    pub fn from_graph(graph: &SimilarityGraph) -> Self {
        let nodes = (0..graph.node_count())
            .map(|n| (n, graph.node_records(n).to_vec()))
            .collect();
        let cliques = graph.cliques().iter().map(|c| c.members.clone()).collect();
        Subgraph::new(nodes, cliques, BTreeSet::new())
    }

    fn new(
        nodes: BTreeMap<usize, Vec<usize>>,
        cliques: Vec<Vec<usize>>,
        separators: BTreeSet<usize>,
    ) -> Self {
        let cliques = maximal_sets(
            cliques
                .into_iter()
                .map(|c| c.into_iter().filter(|n| nodes.contains_key(n)).collect())
                .collect(),
        );
        let separators = separators
            .into_iter()
            .filter(|n| nodes.contains_key(n))
            .collect();
        Subgraph {
            nodes,
            cliques,
            separators,
        }
    }

    /// The piece induced by `keep`, which must be a subset of the nodes.
    pub fn induced(&self, keep: &BTreeSet<usize>) -> Subgraph {
        let nodes = keep.iter().map(|&n| (n, self.nodes[&n].clone())).collect();
        Subgraph::new(nodes, self.cliques.clone(), self.separators.clone())
    }

    pub fn node_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.contains_key(&node)
    }

    pub fn multiplicity(&self, node: usize) -> usize {
        self.nodes[&node].len()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.nodes.values().map(Vec::len).sum()
    }

    fn weight<'a>(&self, nodes: impl IntoIterator<Item = &'a usize>) -> usize {
        nodes.into_iter().map(|n| self.multiplicity(*n)).sum()
    }

    /// Cliques restricted to this piece, each with two or more nodes.
    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn separators(&self) -> &BTreeSet<usize> {
        &self.separators
    }

    /// Record positions of all nodes, ascending.
    pub fn records(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.nodes.values().flatten().copied().collect();
        out.sort_unstable();
        out
    }

    /// Connected pieces, ordered by smallest node.
    pub fn components(&self) -> Vec<Subgraph> {
        let ids: Vec<usize> = self.node_ids().collect();
        let local: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut uf = UnionFind::<usize>::new(ids.len());
        for c in &self.cliques {
            for w in c.windows(2) {
                uf.union(local[&w[0]], local[&w[1]]);
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (i, &n) in ids.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().insert(n);
        }
        let mut parts: Vec<BTreeSet<usize>> = groups.into_values().collect();
        parts.sort_by_key(|p| *p.first().expect("non-empty component"));
        if parts.len() == 1 {
            return vec![self.clone()];
        }
        parts.iter().map(|p| self.induced(p)).collect()
    }

    fn without(&self, drop: &BTreeSet<usize>) -> Subgraph {
        let keep: BTreeSet<usize> = self.node_ids().filter(|n| !drop.contains(n)).collect();
        self.induced(&keep)
    }

    /// All of this piece merged into one node (the smallest id).
    fn collapsed(&self) -> Subgraph {
        let id = *self.nodes.keys().next().expect("non-empty piece");
        let nodes = BTreeMap::from([(id, self.records())]);
        Subgraph {
            nodes,
            cliques: Vec::new(),
            separators: BTreeSet::new(),
        }
    }
}

/// Cliques chained by overlaps of at least `k + 1` records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VUnion {
    /// Positions into [`Subgraph::cliques`].
    pub cliques: Vec<usize>,
    pub nodes: BTreeSet<usize>,
    /// Nodes shared with cliques outside the union.
    pub border: BTreeSet<usize>,
}

/// Groups the cliques of `sub` into v-unions: two cliques join when the
/// records they share number at least `k + 1`. Pairwise overlaps come from
/// one pass over each node's clique list.
pub fn find_vunions(sub: &Subgraph, k: usize) -> Vec<VUnion> {
    let cliques = sub.cliques();
    let mut index: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (c, members) in cliques.iter().enumerate() {
        for &n in members {
            index.entry(n).or_default().push(c);
        }
    }
    let mut shared: HashMap<(usize, usize), usize> = HashMap::new();
    for (&n, cs) in &index {
        for (i, &x) in cs.iter().enumerate() {
            for &y in &cs[i + 1..] {
                *shared.entry((x, y)).or_insert(0) += sub.multiplicity(n);
            }
        }
    }
    let mut uf = UnionFind::<usize>::new(cliques.len());
    for (&(x, y), &w) in &shared {
        if w > k {
            uf.union(x, y);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in 0..cliques.len() {
        groups.entry(uf.find(c)).or_default().push(c);
    }
    let mut unions: Vec<VUnion> = groups
        .into_values()
        .map(|cs| {
            let nodes: BTreeSet<usize> = cs
                .iter()
                .flat_map(|&c| cliques[c].iter().copied())
                .collect();
            let root = uf.find(cs[0]);
            let border = nodes
                .iter()
                .copied()
                .filter(|n| index[n].iter().any(|&c| uf.find(c) != root))
                .collect();
            VUnion {
                cliques: cs,
                nodes,
                border,
            }
        })
        .collect();
    unions.sort_by_key(|u| *u.nodes.first().expect("clique has nodes"));
    unions
}

/// Result of screening one piece.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Screened {
    /// The piece meets the (k+1)-overlap condition; it needs a flow check.
    Unchanged,
    /// The piece was resolved into cores (record positions) and smaller
    /// pieces to examine further.
    Reduced {
        cores: Vec<Vec<usize>>,
        pieces: Vec<Subgraph>,
    },
}

/// One screening step.
///
/// A single node is a core when it stands for two or more records and is
/// not a separator. A piece forming one v-union is collapsed into a single
/// node unless it carries separators. Otherwise every v-union whose border
/// has at most `k` records, and whose border actually separates it from the
/// rest of the piece, is cut off without its border; what lies outside
/// these v-unions forms further pieces.
pub fn screen(sub: &Subgraph, k: usize) -> Screened {
    if sub.len() == 1 {
        let n = sub.node_ids().next().expect("one node");
        let cores = if sub.multiplicity(n) >= 2 && !sub.separators.contains(&n) {
            vec![sub.records()]
        } else {
            Vec::new()
        };
        return Screened::Reduced {
            cores,
            pieces: Vec::new(),
        };
    }
    let unions = find_vunions(sub, k);
    if unions.len() <= 1 {
        if !sub.separators.is_empty() {
            return Screened::Unchanged;
        }
        return Screened::Reduced {
            cores: Vec::new(),
            pieces: vec![sub.collapsed()],
        };
    }
    let all: BTreeSet<usize> = sub.node_ids().collect();
    let mut pieces = Vec::new();
    let mut rest = all.clone();
    let mut reduced = false;
    for u in &unions {
        if sub.weight(&u.border) > k {
            continue;
        }
        let inner: BTreeSet<usize> = u.nodes.difference(&u.border).copied().collect();
        if inner.is_empty() || u.nodes.len() == all.len() {
            continue;
        }
        reduced = true;
        pieces.extend(sub.induced(&inner).components());
        for n in &u.nodes {
            rest.remove(n);
        }
    }
    if !reduced {
        return Screened::Unchanged;
    }
    if !rest.is_empty() {
        pieces.extend(sub.induced(&rest).components());
    }
    Screened::Reduced {
        cores: Vec::new(),
        pieces,
    }
}

/// Result of the flow check on a screened piece.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Split {
    /// Every adjacent v-union pair is joined by more than `k` disjoint paths.
    Core(Vec<usize>),
    /// Pieces on either side of a separator, each including the separator.
    Pieces {
        separator: Vec<usize>,
        pieces: Vec<Subgraph>,
    },
}

/// Checks each pair of v-unions that share nodes, taking the smallest node
/// of each union outside the other as endpoints. The first pair with a flow
/// of at most `k` yields a separator; the piece is cut into the components
/// left after removing it, each joined back with the separator marked.
pub fn split(sub: &Subgraph, k: usize) -> Split {
    let unions = find_vunions(sub, k);
    for (i, q) in unions.iter().enumerate() {
        for q2 in &unions[i + 1..] {
            if q.nodes.is_disjoint(&q2.nodes) {
                continue;
            }
            let (Some(&a), Some(&b)) = (
                q.nodes.difference(&q2.nodes).next(),
                q2.nodes.difference(&q.nodes).next(),
            ) else {
                continue;
            };
            let mut net = FlowNetwork::build(sub, a, b).expect("endpoints are in the piece");
            if let FlowOutcome { cut: Some(cut), .. } = net.max_flow(Some(k)) {
                let sep: BTreeSet<usize> = cut.iter().copied().collect();
                let pieces = sub
                    .without(&sep)
                    .components()
                    .into_iter()
                    .map(|c| {
                        let mut keep: BTreeSet<usize> = c.node_ids().collect();
                        keep.extend(&sep);
                        let mut piece = sub.induced(&keep);
                        piece.separators.extend(&sep);
                        piece
                    })
                    .collect();
                return Split::Pieces {
                    separator: cut,
                    pieces,
                };
            }
        }
    }
    Split::Core(sub.records())
}

/// A set of records proven k-robust and inseparable at level `k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KCore {
    /// Record ids, ascending.
    pub records: Vec<String>,
    pub k: usize,
}

impl KCore {
    /// Stable hash of the member ids.
    pub fn id(&self) -> String {
        stable_id(&self.records)
    }
}

/// Hex digest prefix identifying a sorted id list.
pub fn stable_id<S: AsRef<str>>(ids: &[S]) -> String {
    let mut h = Sha256::new();
    for id in ids {
        h.update(id.as_ref().as_bytes());
        h.update([0]);
    }
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Finds the k-cores of `graph`, sorted by record ids.
///
/// Pieces are drawn from a work queue: screened, and when screening leaves
/// a piece unchanged, either stripped of its separators or checked by
/// [`split`]. The graph may be simplified or not; both give the same cores.
pub fn identify_cores(graph: &SimilarityGraph, k: usize) -> Vec<KCore> {
    let mut found = core_positions(&Subgraph::from_graph(graph), k);
    found.sort();
    found
        .into_iter()
        .map(|recs| {
            let mut records: Vec<String> =
                recs.iter().map(|&r| graph.records()[r].clone()).collect();
            records.sort();
            KCore { records, k }
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Core record positions of `sub`, unordered.
pub fn core_positions(sub: &Subgraph, k: usize) -> Vec<Vec<usize>> {
    let mut cores = Vec::new();
    let mut queue = sub.components();
    while let Some(piece) = queue.pop() {
        match screen(&piece, k) {
            Screened::Reduced { cores: c, pieces } => {
                cores.extend(c);
                queue.extend(pieces);
            }
            Screened::Unchanged if !piece.separators.is_empty() => {
                let rest = piece.without(&piece.separators);
                if !rest.is_empty() {
                    queue.extend(rest.components());
                }
            }
            Screened::Unchanged => match split(&piece, k) {
                Split::Core(records) => cores.push(records),
                Split::Pieces { pieces, .. } => queue.extend(pieces),
            },
        }
    }
    cores
}

/// Writes one line per core: `core_id<TAB>k<TAB>record ids comma-separated`.
pub fn dump_cores<W: Write>(cores: &[KCore], mut out: W) -> std::io::Result<()> {
    let mut sorted: Vec<&KCore> = cores.iter().collect();
    sorted.sort();
    for c in sorted {
        writeln!(out, "{}\t{}\t{}", c.id(), c.k, c.records.join(","))?;
    }
    Ok(())
}
