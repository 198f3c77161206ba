//! Vertex-capacitated max flow between two nodes of a subgraph.
//!
//! Every interior node `v` becomes an arc `v_in -> v_out` whose capacity is
//! the number of records `v` stands for, so the min cut is a minimum vertex
//! separator weighted by multiplicity.

use std::collections::{BTreeSet, VecDeque};

use super::Subgraph;
use crate::error::{Error, Result};

/// Flow value; `Infinite` when source and sink are adjacent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FlowValue {
    Finite(u64),
    Infinite,
}

impl FlowValue {
    pub fn exceeds(self, k: usize) -> bool {
        match self {
            FlowValue::Finite(v) => v > k as u64,
            FlowValue::Infinite => true,
        }
    }
}

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: u64,
}

/// Residual network with paired arcs (`i` and `i ^ 1`).
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    source: usize,
    sink: usize,
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    /// Graph node of each interior split pair, with its in and out vertex.
    interior: Vec<(usize, usize, usize)>,
    infinite: u64,
}

impl FlowNetwork {
    /// Builds the network for `a -> b` over `sub`. Errors if either node is
    /// not in the subgraph.
    pub fn build(sub: &Subgraph, a: usize, b: usize) -> Result<Self> {
        for n in [a, b] {
            if !sub.contains(n) {
                return Err(Error::NodeAbsent(n));
            }
        }
        let infinite = sub.total_multiplicity() as u64 + 1;
        let ids: Vec<usize> = sub.node_ids().collect();
        let local = |n: usize| ids.binary_search(&n).expect("node of subgraph");
        let (vin, vout) = (|i: usize| 2 * i, |i: usize| 2 * i + 1);
        let mut net = FlowNetwork {
            source: vin(local(a)),
            sink: vin(local(b)),
            arcs: Vec::new(),
            out: vec![Vec::new(); 2 * ids.len()],
            interior: Vec::new(),
            infinite,
        };
        // Source and sink are not split: both ends use the in-vertex.
        let tail = |n: usize| {
            if n == a || n == b {
                vin(local(n))
            } else {
                vout(local(n))
            }
        };
        for (i, &n) in ids.iter().enumerate() {
            if n != a && n != b {
                net.add(vin(i), vout(i), sub.multiplicity(n) as u64);
                net.add(vout(i), vin(i), infinite);
                net.interior.push((n, vin(i), vout(i)));
            }
        }
        let mut edges = BTreeSet::new();
        for clique in sub.cliques() {
            for &u in clique {
                for &v in clique {
                    if u != v && u != b && v != a {
                        edges.insert((u, v));
                    }
                }
            }
        }
        for (u, v) in edges {
            net.add(tail(u), vin(local(v)), infinite);
        }
        Ok(net)
    }

    fn add(&mut self, from: usize, to: usize, cap: u64) {
        self.out[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap });
        self.out[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: 0 });
    }

    /// Edmonds-Karp. With `limit = Some(k)` augmentation stops as soon as
    /// the flow exceeds `k`; the returned value is then only a lower bound
    /// and no cut is reported.
    pub fn max_flow(&mut self, limit: Option<usize>) -> FlowOutcome {
        let mut flow: u64 = 0;
        loop {
            if limit.is_some_and(|k| flow > k as u64) || flow >= self.infinite {
                break;
            }
            let Some(parent) = self.augmenting_path() else {
                break;
            };
            let mut bottleneck = u64::MAX;
            let mut v = self.sink;
            while v != self.source {
                let arc = parent[v].expect("path arc");
                bottleneck = bottleneck.min(self.arcs[arc].cap);
                v = self.arcs[arc ^ 1].to;
            }
            let mut v = self.sink;
            while v != self.source {
                let arc = parent[v].expect("path arc");
                self.arcs[arc].cap -= bottleneck;
                self.arcs[arc ^ 1].cap += bottleneck;
                v = self.arcs[arc ^ 1].to;
            }
            flow = flow.saturating_add(bottleneck);
        }
        if flow >= self.infinite {
            return FlowOutcome {
                value: FlowValue::Infinite,
                cut: None,
            };
        }
        if limit.is_some_and(|k| flow > k as u64) {
            return FlowOutcome {
                value: FlowValue::Finite(flow),
                cut: None,
            };
        }
        let reach = self.reachable();
        let cut = self
            .interior
            .iter()
            .filter(|&&(_, i, o)| reach[i] && !reach[o])
            .map(|&(n, _, _)| n)
            .collect();
        FlowOutcome {
            value: FlowValue::Finite(flow),
            cut: Some(cut),
        }
    }

    fn augmenting_path(&self) -> Option<Vec<Option<usize>>> {
        let mut parent: Vec<Option<usize>> = vec![None; self.out.len()];
        let mut seen = vec![false; self.out.len()];
        seen[self.source] = true;
        let mut queue = VecDeque::from([self.source]);
        while let Some(u) = queue.pop_front() {
            for &arc in &self.out[u] {
                let Arc { to, cap } = self.arcs[arc];
                if cap > 0 && !seen[to] {
                    seen[to] = true;
                    parent[to] = Some(arc);
                    if to == self.sink {
                        return Some(parent);
                    }
                    queue.push_back(to);
                }
            }
        }
        None
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.out.len()];
        seen[self.source] = true;
        let mut stack = vec![self.source];
        while let Some(u) = stack.pop() {
            for &arc in &self.out[u] {
                let Arc { to, cap } = self.arcs[arc];
                if cap > 0 && !seen[to] {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        seen
    }

    /// Capacity of the split arc of graph node `n`, if it is interior.
    pub fn split_capacity(&self, n: usize) -> Option<u64> {
        let &(_, i, _) = self.interior.iter().find(|(m, _, _)| *m == n)?;
        self.out[i]
            .iter()
            .find(|&&arc| arc % 2 == 0 && self.arcs[arc].to == i + 1)
            .map(|&arc| self.arcs[arc].cap + self.arcs[arc ^ 1].cap)
    }

    /// Number of forward arcs with infinite capacity between distinct nodes.
    pub fn infinite_arcs(&self) -> usize {
        (0..self.arcs.len())
            .step_by(2)
            .filter(|&arc| {
                let from = self.arcs[arc ^ 1].to;
                let to = self.arcs[arc].to;
                from / 2 != to / 2 && self.arcs[arc].cap + self.arcs[arc ^ 1].cap == self.infinite
            })
            .count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowOutcome {
    pub value: FlowValue,
    /// Interior nodes whose split arcs form a minimum cut; absent when the
    /// flow is infinite or exceeded the limit.
    pub cut: Option<Vec<usize>>,
}

/// `kappa(a, b)` and a minimum separator, computed without a limit.
pub fn max_flow(sub: &Subgraph, a: usize, b: usize) -> Result<FlowOutcome> {
    Ok(FlowNetwork::build(sub, a, b)?.max_flow(None))
}
