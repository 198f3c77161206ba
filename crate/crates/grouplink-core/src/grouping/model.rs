//! Element-to-cluster similarity sources for the clustering stage.

use std::collections::HashMap;

use super::Clustering;
use crate::schema::Schema;
use crate::simcore::{
    element_cluster_sim, SigView, Signature, SimilarityParams, ValueDistinctness,
};

/// Supplies `sim(e, Cl)` to the clustering stage.
///
/// `State` caches whatever the model derives from a clustering (cluster
/// signatures, for instance); it is rebuilt by [`prepare`](Self::prepare)
/// and kept current during initialization through
/// [`on_assign`](Self::on_assign).
pub trait SimilarityModel {
    type State;

    fn element_count(&self) -> usize;

    fn is_core(&self, e: usize) -> bool;

    fn prepare(&self, clustering: &Clustering) -> Self::State;

    /// Updates `state` after element `e` was placed into `cluster`, which
    /// `clustering` already reflects.
    fn on_assign(&self, state: &mut Self::State, clustering: &Clustering, e: usize, cluster: usize);

    /// Similarity of `e` to the cluster it belongs to.
    fn own(&self, state: &Self::State, clustering: &Clustering, e: usize) -> f64;

    /// Similarity of `e` to a cluster it does not belong to.
    fn to_cluster(
        &self,
        state: &Self::State,
        clustering: &Clustering,
        e: usize,
        cluster: usize,
    ) -> f64;
}

/// An element to cluster: a core (two or more records) or a satellite.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    /// Record ids, ascending.
    pub records: Vec<String>,
    pub core: bool,
    pub signature: Signature,
}

/// Similarity from weighted value signatures.
///
/// A cluster is compared with one of its own elements after taking that
/// element out, so an element alone in its cluster scores 1.
pub struct SignatureModel<'a> {
    elements: &'a [Element],
    schema: &'a Schema,
    params: &'a SimilarityParams,
}

pub struct SignatureState {
    clusters: Vec<Option<Signature>>,
    distinct: ValueDistinctness,
}

impl<'a> SignatureModel<'a> {
    pub fn new(elements: &'a [Element], schema: &'a Schema, params: &'a SimilarityParams) -> Self {
        SignatureModel {
            elements,
            schema,
            params,
        }
    }

    pub fn elements(&self) -> &[Element] {
        self.elements
    }
}

impl SimilarityModel for SignatureModel<'_> {
    type State = SignatureState;

    fn element_count(&self) -> usize {
        self.elements.len()
    }

    fn is_core(&self, e: usize) -> bool {
        self.elements[e].core
    }

    fn prepare(&self, clustering: &Clustering) -> SignatureState {
        let attrs = self.schema.len();
        let clusters: Vec<Option<Signature>> = (0..clustering.slots())
            .map(|c| {
                clustering.members(c).map(|m| {
                    let mut sig = Signature::empty(attrs);
                    for &e in m {
                        sig.absorb(&self.elements[e].signature);
                    }
                    sig
                })
            })
            .collect();
        let distinct = ValueDistinctness::from_clusters(attrs, clusters.iter().flatten());
        SignatureState { clusters, distinct }
    }

    fn on_assign(
        &self,
        state: &mut SignatureState,
        clustering: &Clustering,
        e: usize,
        cluster: usize,
    ) {
        if state.clusters.len() < clustering.slots() {
            state.clusters.resize(clustering.slots(), None);
        }
        let sig =
            state.clusters[cluster].get_or_insert_with(|| Signature::empty(self.schema.len()));
        state.distinct.remove_cluster(sig);
        sig.absorb(&self.elements[e].signature);
        state.distinct.add_cluster(sig);
    }

    fn own(&self, state: &SignatureState, clustering: &Clustering, e: usize) -> f64 {
        let c = clustering.cluster_of(e).expect("element is assigned");
        if clustering.members(c).is_some_and(|m| m.len() == 1) {
            return 1.0;
        }
        let whole = state.clusters[c].as_ref().expect("live cluster");
        let sig = &self.elements[e].signature;
        element_cluster_sim(
            sig,
            SigView::without(whole, sig),
            Some(&state.distinct),
            self.schema,
            self.params,
        )
    }

    fn to_cluster(&self, state: &SignatureState, _: &Clustering, e: usize, cluster: usize) -> f64 {
        let Some(sig) = state.clusters.get(cluster).and_then(Option::as_ref) else {
            return 0.0;
        };
        element_cluster_sim(
            &self.elements[e].signature,
            sig,
            Some(&state.distinct),
            self.schema,
            self.params,
        )
    }
}

/// Similarities given explicitly per (element, cluster membership), with a
/// fallback for unlisted pairs. Used to replay published similarity tables.
#[derive(Clone, Debug)]
pub struct MatrixModel {
    labels: Vec<String>,
    cores: Vec<bool>,
    entries: HashMap<(usize, Vec<usize>), f64>,
    fallback: f64,
}

impl MatrixModel {
    pub fn new(labels: Vec<String>, cores: Vec<bool>, fallback: f64) -> Self {
        assert_eq!(labels.len(), cores.len());
        MatrixModel {
            labels,
            cores,
            entries: HashMap::new(),
            fallback,
        }
    }

    pub fn index(&self, label: &str) -> usize {
        self.labels
            .iter()
            .position(|l| l == label)
            .unwrap_or_else(|| panic!("unknown element {label}"))
    }

    /// Sets `sim(element, cluster with these members)`.
    pub fn set(&mut self, element: &str, members: &[&str], value: f64) {
        let e = self.index(element);
        let mut m: Vec<usize> = members.iter().map(|l| self.index(l)).collect();
        m.sort_unstable();
        self.entries.insert((e, m), value);
    }

    fn lookup(&self, e: usize, members: &[usize]) -> f64 {
        self.entries
            .get(&(e, members.to_vec()))
            .copied()
            .unwrap_or(self.fallback)
    }
}

impl SimilarityModel for MatrixModel {
    type State = ();

    fn element_count(&self) -> usize {
        self.labels.len()
    }

    fn is_core(&self, e: usize) -> bool {
        self.cores[e]
    }

    fn prepare(&self, _: &Clustering) {}

    fn on_assign(&self, _: &mut (), _: &Clustering, _: usize, _: usize) {}

    fn own(&self, _: &(), clustering: &Clustering, e: usize) -> f64 {
        let c = clustering.cluster_of(e).expect("element is assigned");
        self.lookup(e, clustering.members(c).expect("live cluster"))
    }

    fn to_cluster(&self, _: &(), clustering: &Clustering, e: usize, cluster: usize) -> f64 {
        clustering
            .members(cluster)
            .map_or(0.0, |m| self.lookup(e, m))
    }
}
