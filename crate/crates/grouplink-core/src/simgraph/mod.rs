//! The v-clique similarity graph: records sharing a name class and a
//! dominant value form a clique, indexed by an inverted index from node to
//! cliques. [`simplify`] merges records that sit in exactly one clique into
//! a single weighted representative node.

mod names;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Write;

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::schema::{Dataset, Record};

pub use names::name_classes;

/// Records sharing one name class and one dominant value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VClique {
    /// Stable hash of the source value and the member record ids.
    pub id: String,
    pub attribute: String,
    pub value: String,
    /// Node indices, ascending.
    pub members: Vec<usize>,
}

/// Cliques over nodes, where each node stands for one or more records.
///
/// Records are kept in ascending id order and nodes are numbered by their
/// smallest record, so a graph built from any permutation of the same
/// records is identical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimilarityGraph {
    records: Vec<String>,
    nodes: Vec<Vec<usize>>,
    cliques: Vec<VClique>,
    index: Vec<Vec<usize>>,
}

impl SimilarityGraph {
    fn assemble(records: Vec<String>, nodes: Vec<Vec<usize>>, mut cliques: Vec<VClique>) -> Self {
        cliques.sort_by(|a, b| a.members.cmp(&b.members).then_with(|| a.id.cmp(&b.id)));
        let mut index = vec![Vec::new(); nodes.len()];
        for (c, clique) in cliques.iter().enumerate() {
            for &n in &clique.members {
                index[n].push(c);
            }
        }
        SimilarityGraph {
            records,
            nodes,
            cliques,
            index,
        }
    }

    /// A graph over one record per label with the given cliques (node
    /// indices into `labels`). Cliques under two nodes, duplicates and
    /// cliques contained in another are dropped.
    pub fn from_cliques(labels: Vec<String>, cliques: Vec<Vec<usize>>) -> Self {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
        let mut pos = vec![0; labels.len()];
        for (p, &i) in order.iter().enumerate() {
            pos[i] = p;
        }
        let records: Vec<String> = order.iter().map(|&i| labels[i].clone()).collect();
        let sets: Vec<Vec<usize>> = cliques
            .into_iter()
            .map(|c| {
                let mut m: Vec<usize> = c.into_iter().map(|i| pos[i]).collect();
                m.sort_unstable();
                m.dedup();
                m
            })
            .collect();
        let mut kept: Vec<VClique> = Vec::new();
        for (i, members) in maximal_sets(sets).into_iter().enumerate() {
            let value = format!("c{i}");
            let id = clique_id("", &value, members.iter().map(|&m| records[m].as_str()));
            kept.push(VClique {
                id,
                attribute: String::new(),
                value,
                members,
            });
        }
        let nodes = (0..records.len()).map(|i| vec![i]).collect();
        SimilarityGraph::assemble(records, nodes, kept)
    }

    /// Record ids in ascending order; node record lists index into this.
    pub fn records(&self) -> &[String] {
        &self.records
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Positions (into [`records`](Self::records)) of the records a node stands for.
    pub fn node_records(&self, node: usize) -> &[usize] {
        &self.nodes[node]
    }

    pub fn multiplicity(&self, node: usize) -> usize {
        self.nodes[node].len()
    }

    /// Display label such as `r1/2` for a node standing for `r1` and `r2`.
    pub fn node_label(&self, node: usize) -> String {
        let ids: Vec<&str> = self.nodes[node]
            .iter()
            .map(|&r| self.records[r].as_str())
            .collect();
        compress_label(&ids)
    }

    pub fn cliques(&self) -> &[VClique] {
        &self.cliques
    }

    /// Clique positions containing `node`.
    pub fn cliques_of(&self, node: usize) -> &[usize] {
        &self.index[node]
    }

    /// Number of nodes that belong to at least one clique.
    pub fn index_entries(&self) -> usize {
        self.index.iter().filter(|c| !c.is_empty()).count()
    }

    /// Checks that the index and the clique member lists agree, that every
    /// clique covers two or more records and that no clique is a subset of
    /// another.
    pub fn is_consistent(&self) -> bool {
        for (c, clique) in self.cliques.iter().enumerate() {
            let size: usize = clique.members.iter().map(|&n| self.nodes[n].len()).sum();
            if size < 2 || !clique.members.windows(2).all(|w| w[0] < w[1]) {
                return false;
            }
            if clique.members.iter().any(|&n| !self.index[n].contains(&c)) {
                return false;
            }
        }
        for (n, cs) in self.index.iter().enumerate() {
            if cs
                .iter()
                .any(|&c| self.cliques[c].members.binary_search(&n).is_err())
            {
                return false;
            }
        }
        for (i, a) in self.cliques.iter().enumerate() {
            for b in &self.cliques[i + 1..] {
                if is_subset(&a.members, &b.members) || is_subset(&b.members, &a.members) {
                    return false;
                }
            }
        }
        true
    }

    /// Record ids covered by clique `c`, sorted.
    pub fn clique_records(&self, c: usize) -> Vec<String> {
        let mut ids: Vec<String> = self.cliques[c]
            .members
            .iter()
            .flat_map(|&n| self.nodes[n].iter().map(|&r| self.records[r].clone()))
            .collect();
        ids.sort();
        ids
    }

    /// Record-id member sets of all cliques, sorted; comparable across
    /// graphs with different node numbering.
    pub fn clique_record_sets(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = (0..self.cliques.len())
            .map(|c| self.clique_records(c))
            .collect();
        out.sort();
        out
    }

    /// Writes one line per clique:
    /// `clique_id<TAB>attribute=value<TAB>member ids comma-separated`.
    pub fn dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut lines: Vec<(Vec<String>, String)> = self
            .cliques
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let ids = self.clique_records(i);
                let line = format!("{}\t{}={}\t{}", c.id, c.attribute, c.value, ids.join(","));
                (ids, line)
            })
            .collect();
        lines.sort();
        for (_, line) in lines {
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Builds the v-clique graph of `dataset`.
///
/// For every dominant value, the records holding it are grouped by name
/// class (at `name_threshold`); each group of two or more records is a
/// candidate clique. A candidate contained in a stored clique is discarded;
/// stored cliques contained in a new one are removed. The resulting set is
/// the family of maximal candidates, independent of processing order.
pub fn build_graph(dataset: &Dataset, name_threshold: f64) -> Result<SimilarityGraph> {
    let schema = dataset.schema();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by(|&a, &b| dataset.record(a).id.cmp(&dataset.record(b).id));
    let records: Vec<&Record> = order.iter().map(|&i| dataset.record(i)).collect();
    let labels: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let classes = name_classes(&records, schema, name_threshold);

    let mut store = CliqueStore::new(records.len());
    for &attr in schema.dominant() {
        let mut holders: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (n, r) in records.iter().enumerate() {
            for v in r.values(attr) {
                holders.entry(v.as_str()).or_default().push(n);
            }
        }
        for (value, nodes) in holders {
            let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for n in nodes {
                by_class.entry(classes[n]).or_default().push(n);
            }
            for members in by_class.into_values().filter(|m| m.len() >= 2) {
                store.offer(attr, value, members);
            }
        }
    }

    let cliques = store
        .into_cliques()
        .map(|(attr, value, members)| {
            let name = schema.name(attr);
            VClique {
                id: clique_id(name, &value, members.iter().map(|&m| labels[m].as_str())),
                attribute: name.to_string(),
                value,
                members,
            }
        })
        .collect();
    let nodes = (0..labels.len()).map(|i| vec![i]).collect();
    Ok(SimilarityGraph::assemble(labels, nodes, cliques))
}

/// Merges nodes that belong to exactly one clique, the same one, into a
/// single node whose multiplicity is the number of records merged.
/// Nodes in no clique or in several cliques are kept as they are.
pub fn simplify(graph: &SimilarityGraph) -> SimilarityGraph {
    let mut rep_of_clique: HashMap<usize, usize> = HashMap::new();
    let mut new_nodes: Vec<Vec<usize>> = Vec::new();
    let mut remap = vec![0; graph.nodes.len()];
    for (n, cs) in graph.index.iter().enumerate() {
        if let [only] = cs.as_slice() {
            if let Some(&rep) = rep_of_clique.get(only) {
                new_nodes[rep].extend_from_slice(&graph.nodes[n]);
                remap[n] = rep;
                continue;
            }
            rep_of_clique.insert(*only, new_nodes.len());
        }
        remap[n] = new_nodes.len();
        new_nodes.push(graph.nodes[n].clone());
    }
    for recs in &mut new_nodes {
        recs.sort_unstable();
    }
    let cliques = graph
        .cliques
        .iter()
        .map(|c| {
            let mut members: Vec<usize> = c.members.iter().map(|&n| remap[n]).collect();
            members.sort_unstable();
            members.dedup();
            VClique {
                members,
                ..c.clone()
            }
        })
        .collect();
    SimilarityGraph::assemble(graph.records.clone(), new_nodes, cliques)
}

/// Maximal candidate cliques with an inverted index over nodes.
struct CliqueStore {
    cliques: Vec<Option<(usize, String, Vec<usize>)>>,
    index: Vec<Vec<usize>>,
}

impl CliqueStore {
    fn new(nodes: usize) -> Self {
        CliqueStore {
            cliques: Vec::new(),
            index: vec![Vec::new(); nodes],
        }
    }

    fn offer(&mut self, attr: usize, value: &str, members: Vec<usize>) {
        let covered = self.index[members[0]].iter().any(|&c| {
            let (_, _, m) = self.cliques[c].as_ref().expect("index holds live cliques");
            is_subset(&members, m)
        });
        if covered {
            return;
        }
        let mut touched: Vec<usize> = members
            .iter()
            .flat_map(|&n| self.index[n].iter().copied())
            .collect();
        touched.sort_unstable();
        touched.dedup();
        for c in touched {
            let inside = matches!(&self.cliques[c], Some((_, _, m)) if is_subset(m, &members));
            if inside {
                let (_, _, m) = self.cliques[c].take().expect("checked live");
                for n in m {
                    self.index[n].retain(|&x| x != c);
                }
            }
        }
        let id = self.cliques.len();
        for &n in &members {
            self.index[n].push(id);
        }
        self.cliques.push(Some((attr, value.to_string(), members)));
    }

    fn into_cliques(self) -> impl Iterator<Item = (usize, String, Vec<usize>)> {
        self.cliques.into_iter().flatten()
    }
}

/// `a ⊆ b` for ascending slices.
fn is_subset(a: &[usize], b: &[usize]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut it = b.iter();
    a.iter().all(|x| it.any(|y| y == x))
}

/// Drops sets under two members, duplicates, and sets contained in another.
pub(crate) fn maximal_sets(mut sets: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    sets.retain(|s| s.len() >= 2);
    sets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    let mut kept: Vec<Vec<usize>> = Vec::new();
    for s in sets {
        if !kept.iter().any(|k| is_subset(&s, k)) {
            kept.push(s);
        }
    }
    kept.sort();
    kept
}

fn clique_id<'a>(attribute: &str, value: &str, members: impl Iterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    h.update(attribute.as_bytes());
    h.update([0]);
    h.update(value.as_bytes());
    for m in members {
        h.update([0]);
        h.update(m.as_bytes());
    }
    let digest = h.finalize();
    let mut out = String::with_capacity(16);
    for b in &digest[..8] {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// `r1/2/3` style label when ids share a prefix before their numeric
/// suffix, otherwise the ids joined by `/`.
fn compress_label(ids: &[&str]) -> String {
    let split = |id: &str| {
        let cut = id.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        (id[..cut].to_string(), id[cut..].to_string())
    };
    let Some((first, rest)) = ids.split_first() else {
        return String::new();
    };
    let (stem, _) = split(first);
    if rest.iter().all(|id| {
        let (s, digits) = split(id);
        s == stem && !digits.is_empty()
    }) {
        let mut out = first.to_string();
        for id in rest {
            out.push('/');
            out.push_str(&id[stem.len()..]);
        }
        out
    } else {
        ids.join("/")
    }
}

#[cfg(test)]
mod tests;
