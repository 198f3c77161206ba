//! Stage two: cluster cores and satellites into groups by greedily raising
//! the silhouette-style SV-index of the block.

mod model;

use std::collections::BTreeMap;
use std::io::Write;

pub use model::{Element, MatrixModel, SignatureModel, SignatureState, SimilarityModel};

use crate::error::{Error, Result};
use crate::robustcore::stable_id;

/// Improvements smaller than this are treated as ties.
const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupingParams {
    pub alpha: f64,
    pub beta: f64,
    /// Minimum similarity for a satellite to join a cluster during
    /// initialization.
    pub theta_ini: f64,
    /// Elements with `S(e)` at or below this are border elements.
    pub theta_s: f64,
}

impl Default for GroupingParams {
    fn default() -> Self {
        GroupingParams {
            alpha: 0.01,
            beta: 0.02,
            theta_ini: 0.8,
            theta_s: 0.3,
        }
    }
}

impl GroupingParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta_ini", self.theta_ini), ("theta_s", self.theta_s)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if !(self.alpha >= 0.0 && self.beta > self.alpha) {
            return Err(Error::Config(format!(
                "need 0 <= alpha < beta, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Assignment of elements to clusters. Cluster ids are slot indices; a
/// slot is `None` once its cluster empties, so ids stay stable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clustering {
    assign: Vec<Option<usize>>,
    clusters: Vec<Option<Vec<usize>>>,
}

impl Clustering {
    /// `elements` elements, none assigned.
    pub fn new(elements: usize) -> Self {
        Clustering {
            assign: vec![None; elements],
            clusters: Vec::new(),
        }
    }

    /// Builds a clustering from explicit member lists.
    pub fn from_clusters(elements: usize, clusters: Vec<Vec<usize>>) -> Self {
        let mut c = Clustering::new(elements);
        for members in clusters {
            let id = c.clusters.len();
            c.clusters.push(Some(Vec::new()));
            for e in members {
                c.insert(e, id);
            }
        }
        c
    }

    pub fn element_count(&self) -> usize {
        self.assign.len()
    }

    /// Number of slots, live or not.
    pub fn slots(&self) -> usize {
        self.clusters.len()
    }

    pub fn members(&self, cluster: usize) -> Option<&[usize]> {
        self.clusters.get(cluster)?.as_deref()
    }

    pub fn cluster_of(&self, e: usize) -> Option<usize> {
        self.assign[e]
    }

    /// Ids of non-empty clusters, ascending.
    pub fn cluster_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.clusters
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_some())
            .map(|(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.cluster_ids().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Opens a new cluster holding `e` and returns its id.
    pub fn open(&mut self, e: usize) -> usize {
        let id = self.clusters.len();
        self.clusters.push(Some(Vec::new()));
        self.insert(e, id);
        id
    }

    /// Moves `e` into `cluster`, dropping its old cluster if that empties.
    pub fn insert(&mut self, e: usize, cluster: usize) {
        if let Some(old) = self.assign[e] {
            let members = self.clusters[old].as_mut().expect("live cluster");
            members.retain(|&m| m != e);
            if members.is_empty() {
                self.clusters[old] = None;
            }
        }
        let members = self.clusters[cluster].get_or_insert_with(Vec::new);
        let at = members.binary_search(&e).unwrap_err();
        members.insert(at, e);
        self.assign[e] = Some(cluster);
    }

    /// Member lists of the live clusters, sorted; independent of ids.
    pub fn canonical(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.clusters.iter().flatten().cloned().collect();
        out.sort();
        out
    }

    fn is_complete(&self) -> bool {
        self.assign.iter().all(Option::is_some)
    }
}

/// `S(e)` and its inputs for one element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementScore {
    pub a: f64,
    pub b: f64,
    pub s: f64,
    /// Most similar cluster other than the element's own.
    pub closest: Option<usize>,
}

/// `S(e) = (a - b + alpha) / (max(a, b) + beta)`.
pub fn sv_element(a: f64, b: f64, alpha: f64, beta: f64) -> f64 {
    (a - b + alpha) / (a.max(b) + beta)
}

fn score<M: SimilarityModel>(
    model: &M,
    state: &M::State,
    c: &Clustering,
    e: usize,
    params: &GroupingParams,
) -> ElementScore {
    let own = c.cluster_of(e).expect("element is assigned");
    let a = model.own(state, c, e);
    let mut best: Option<(usize, f64)> = None;
    for other in c.cluster_ids().filter(|&o| o != own) {
        let sim = model.to_cluster(state, c, e, other);
        if best.is_none_or(|(_, b)| sim > b) {
            best = Some((other, sim));
        }
    }
    let b = best.map_or(0.0, |(_, b)| b);
    ElementScore {
        a,
        b,
        s: sv_element(a, b, params.alpha, params.beta),
        closest: best.map(|(c, _)| c),
    }
}

/// Scores of every element under `clustering`.
pub fn element_scores<M: SimilarityModel>(
    model: &M,
    clustering: &Clustering,
    params: &GroupingParams,
) -> Vec<ElementScore> {
    let state = model.prepare(clustering);
    (0..model.element_count())
        .map(|e| score(model, &state, clustering, e, params))
        .collect()
}

fn mean(scores: &[ElementScore]) -> f64 {
    scores.iter().map(|s| s.s).sum::<f64>() / scores.len() as f64
}

/// Average `S(e)` over all elements.
pub fn sv_index<M: SimilarityModel>(
    model: &M,
    clustering: &Clustering,
    params: &GroupingParams,
) -> Result<f64> {
    if model.element_count() == 0 || !clustering.is_complete() {
        return Err(Error::EmptyClustering);
    }
    Ok(mean(&element_scores(model, clustering, params)))
}

/// No cluster without a core holds more than one element.
pub fn is_valid<M: SimilarityModel>(model: &M, clustering: &Clustering) -> bool {
    clustering
        .clusters
        .iter()
        .flatten()
        .all(|m| m.len() <= 1 || m.iter().any(|&e| model.is_core(e)))
}

/// One cluster per core, then each satellite (in element order) joins its
/// most similar core cluster when that similarity reaches `theta_ini`, or
/// starts its own.
pub fn initialize<M: SimilarityModel>(model: &M, params: &GroupingParams) -> Clustering {
    let n = model.element_count();
    let mut c = Clustering::new(n);
    let mut state = model.prepare(&c);
    for e in (0..n).filter(|&e| model.is_core(e)) {
        let id = c.open(e);
        model.on_assign(&mut state, &c, e, id);
    }
    let core_clusters = c.slots();
    for e in (0..n).filter(|&e| !model.is_core(e)) {
        let mut best: Option<(usize, f64)> = None;
        for cl in 0..core_clusters {
            let sim = model.to_cluster(&state, &c, e, cl);
            if best.is_none_or(|(_, b)| sim > b) {
                best = Some((cl, sim));
            }
        }
        let id = match best {
            Some((cl, sim)) if sim >= params.theta_ini => {
                c.insert(e, cl);
                cl
            }
            _ => c.open(e),
        };
        model.on_assign(&mut state, &c, e, id);
    }
    c
}

/// Two clusters with the border elements torn between them.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePair {
    /// Cluster ids, smaller first.
    pub clusters: (usize, usize),
    pub borders: Vec<usize>,
    /// Sum of `1 - S(e)` over the borders.
    pub benefit: f64,
}

/// Groups border elements (`S(e) <= theta_s`) by their own and closest
/// other cluster; ranked by descending benefit, then by cluster ids.
pub fn find_candidates(
    clustering: &Clustering,
    scores: &[ElementScore],
    theta_s: f64,
) -> Vec<CandidatePair> {
    let mut pairs: BTreeMap<(usize, usize), CandidatePair> = BTreeMap::new();
    for (e, sc) in scores.iter().enumerate() {
        let (Some(own), Some(other)) = (clustering.cluster_of(e), sc.closest) else {
            continue;
        };
        if sc.s > theta_s {
            continue;
        }
        let key = (own.min(other), own.max(other));
        let pair = pairs.entry(key).or_insert_with(|| CandidatePair {
            clusters: key,
            borders: Vec::new(),
            benefit: 0.0,
        });
        pair.borders.push(e);
        pair.benefit += 1.0 - sc.s;
    }
    let mut out: Vec<CandidatePair> = pairs.into_values().collect();
    out.sort_by(|x, y| {
        y.benefit
            .total_cmp(&x.benefit)
            .then(x.clusters.cmp(&y.clusters))
    });
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PlanKind {
    Merge,
    /// Borders of the first cluster move to the second.
    MoveFirstToSecond,
    /// Borders of the second cluster move to the first.
    MoveSecondToFirst,
    /// All borders leave for a new cluster.
    Extract,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub kind: PlanKind,
    pub clustering: Clustering,
}

/// The re-clustering plans for `pair`, minus those that break the validity
/// rule, change nothing, or repeat an earlier plan.
pub fn enumerate_plans<M: SimilarityModel>(
    model: &M,
    pair: &CandidatePair,
    clustering: &Clustering,
) -> Vec<Plan> {
    let (x, y) = pair.clusters;
    let side = |cl: usize| {
        pair.borders
            .iter()
            .copied()
            .filter(move |&e| clustering.cluster_of(e) == Some(cl))
    };
    let mut plans = Vec::new();

    let mut merged = clustering.clone();
    for &e in clustering.members(y).unwrap_or(&[]) {
        merged.insert(e, x);
    }
    plans.push(Plan {
        kind: PlanKind::Merge,
        clustering: merged,
    });

    let mut to_y = clustering.clone();
    side(x).for_each(|e| to_y.insert(e, y));
    plans.push(Plan {
        kind: PlanKind::MoveFirstToSecond,
        clustering: to_y,
    });

    let mut to_x = clustering.clone();
    side(y).for_each(|e| to_x.insert(e, x));
    plans.push(Plan {
        kind: PlanKind::MoveSecondToFirst,
        clustering: to_x,
    });

    let mut extracted = clustering.clone();
    if let Some((&first, rest)) = pair.borders.split_first() {
        let id = extracted.open(first);
        rest.iter().for_each(|&e| extracted.insert(e, id));
    }
    plans.push(Plan {
        kind: PlanKind::Extract,
        clustering: extracted,
    });

    let mut seen = vec![clustering.canonical()];
    plans.retain(|p| {
        let key = p.clustering.canonical();
        if seen.contains(&key) || !is_valid(model, &p.clustering) {
            return false;
        }
        seen.push(key);
        true
    });
    plans
}

/// Elements whose score a plan on `pair` can move: members of both
/// clusters and elements whose closest other cluster is one of them.
fn affected(pair: &CandidatePair, clustering: &Clustering, scores: &[ElementScore]) -> Vec<usize> {
    let (x, y) = pair.clusters;
    let hit = |cl: Option<usize>| cl == Some(x) || cl == Some(y);
    (0..scores.len())
        .filter(|&e| hit(clustering.cluster_of(e)) || hit(scores[e].closest))
        .collect()
}

/// Current clustering with cached state and scores.
struct Current<'m, M: SimilarityModel> {
    model: &'m M,
    params: GroupingParams,
    clustering: Clustering,
    scores: Vec<ElementScore>,
    sv: f64,
}

impl<'m, M: SimilarityModel> Current<'m, M> {
    fn new(model: &'m M, clustering: Clustering, params: GroupingParams) -> Self {
        let state = model.prepare(&clustering);
        let scores: Vec<ElementScore> = (0..model.element_count())
            .map(|e| score(model, &state, &clustering, e, &params))
            .collect();
        let sv = mean(&scores);
        Current {
            model,
            params,
            clustering,
            scores,
            sv,
        }
    }

    /// Accepts `next` if it raises the SV-index.
    fn try_accept(&mut self, next: Clustering) -> bool {
        let candidate = Current::new(self.model, next, self.params);
        if candidate.sv > self.sv + EPS {
            *self = candidate;
            true
        } else {
            false
        }
    }

    /// Sum of `S(e)` changes over `elements` if `plan` were applied.
    fn delta(&self, plan: &Clustering, elements: &[usize]) -> f64 {
        let state = self.model.prepare(plan);
        elements
            .iter()
            .map(|&e| score(self.model, &state, plan, e, &self.params).s - self.scores[e].s)
            .sum()
    }

    /// Moves elements that prefer another cluster, one at a time, while
    /// each move raises the SV-index.
    fn settle(&mut self) {
        'pass: loop {
            for e in 0..self.scores.len() {
                let sc = self.scores[e];
                let Some(target) = sc.closest else { continue };
                if sc.b <= sc.a {
                    continue;
                }
                let mut next = self.clustering.clone();
                next.insert(e, target);
                if is_valid(self.model, &next) && self.try_accept(next) {
                    continue 'pass;
                }
            }
            return;
        }
    }
}

/// Applies the best plan of the best-ranked candidate pair whenever it
/// strictly raises the SV-index, then lets elements drift to clusters they
/// prefer; repeats until no candidate improves. The SV-index strictly
/// increases with every change, so this terminates.
pub fn adjust<M: SimilarityModel>(
    model: &M,
    clustering: Clustering,
    params: &GroupingParams,
) -> Clustering {
    if model.element_count() == 0 {
        return clustering;
    }
    let mut cur = Current::new(model, clustering, *params);
    'outer: loop {
        for pair in find_candidates(&cur.clustering, &cur.scores, params.theta_s) {
            let elements = affected(&pair, &cur.clustering, &cur.scores);
            let mut best: Option<(f64, Clustering)> = None;
            for plan in enumerate_plans(model, &pair, &cur.clustering) {
                let d = cur.delta(&plan.clustering, &elements);
                if best.as_ref().is_none_or(|(b, _)| d > *b) {
                    best = Some((d, plan.clustering));
                }
            }
            if let Some((d, next)) = best {
                if d > EPS && cur.try_accept(next) {
                    cur.settle();
                    continue 'outer;
                }
            }
        }
        return cur.clustering;
    }
}

/// Initialization followed by adjustment.
pub fn cluster_block<M: SimilarityModel>(model: &M, params: &GroupingParams) -> Clustering {
    adjust(model, initialize(model, params), params)
}

/// Record id to group id; the group id hashes the group's sorted record ids.
pub fn assign_groups(elements: &[Element], clustering: &Clustering) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for members in clustering.clusters.iter().flatten() {
        let mut ids: Vec<&str> = members
            .iter()
            .flat_map(|&e| elements[e].records.iter().map(String::as_str))
            .collect();
        ids.sort_unstable();
        let gid = stable_id(&ids);
        for id in ids {
            out.insert(id.to_string(), gid.clone());
        }
    }
    out
}

/// Groups of an assignment as sorted id lists, sorted.
pub fn groups_of(assignment: &BTreeMap<String, String>) -> Vec<Vec<String>> {
    let mut by_group: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (id, gid) in assignment {
        by_group.entry(gid).or_default().push(id.clone());
    }
    let mut out: Vec<Vec<String>> = by_group.into_values().collect();
    out.sort();
    out
}

/// Writes `record_id<TAB>group_id` lines in record-id order.
pub fn dump_groups<W: Write>(
    assignment: &BTreeMap<String, String>,
    mut out: W,
) -> std::io::Result<()> {
    for (id, gid) in assignment {
        writeln!(out, "{id}\t{gid}")?;
    }
    Ok(())
}

/// Elements of `dataset`: one per core in the given order, then one
/// satellite per record outside every core, by ascending id.
pub fn build_elements(
    dataset: &crate::schema::Dataset,
    cores: &[crate::robustcore::KCore],
) -> Result<Vec<Element>> {
    let index: BTreeMap<&str, usize> = dataset
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let lookup = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| Error::IdMismatch(vec![id.to_string()]))
    };
    let mut covered = vec![false; dataset.len()];
    let mut out = Vec::with_capacity(cores.len());
    for core in cores {
        let positions = core
            .records
            .iter()
            .map(|id| lookup(id))
            .collect::<Result<Vec<_>>>()?;
        positions.iter().for_each(|&p| covered[p] = true);
        let signature = crate::simcore::Signature::build(
            positions.iter().map(|&p| dataset.record(p)),
            dataset.schema(),
        )?;
        out.push(Element {
            records: core.records.clone(),
            core: true,
            signature,
        });
    }
    for (&id, &p) in &index {
        if !covered[p] {
            out.push(Element {
                records: vec![id.to_string()],
                core: false,
                signature: crate::simcore::Signature::from_record(dataset.record(p)),
            });
        }
    }
    Ok(out)
}
