use proptest::prelude::*;

use super::*;
use crate::fixtures::listings20_dataset;
use crate::schema::Attribute;
use crate::schema::AttributeRole;
use crate::Schema;

fn ids(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn range(lo: usize, hi: usize) -> Vec<String> {
    let mut out: Vec<String> = (lo..=hi).map(|i| format!("r{i}")).collect();
    out.sort();
    out
}

#[test]
fn home_depot_name_classes() {
    let ds = listings20_dataset();
    let recs: Vec<&Record> = ds.records()[..10].iter().collect();
    let classes = name_classes(&recs, ds.schema(), 0.95);
    // ", the" x7 | ", usa" + " usa" | "- tools"
    assert!(classes[..7].iter().all(|&c| c == classes[0]));
    assert_eq!(classes[7], classes[8]);
    assert_ne!(classes[7], classes[0]);
    assert_ne!(classes[9], classes[0]);
    assert_ne!(classes[9], classes[7]);
    let loose = name_classes(&recs, ds.schema(), 0.8);
    assert!(loose.iter().all(|&c| c == loose[0]));
}

#[test]
fn name_classes_trivial_cases() {
    let schema = Schema::new(vec![
        Attribute::new("name", AttributeRole::CommonValue, false),
        Attribute::new("phone", AttributeRole::DominantValue, false),
    ])
    .unwrap();
    let rec = |id: &str, name: &str| Record {
        id: id.into(),
        values: vec![[name.to_string()].into_iter().collect(), Default::default()],
    };
    let same = [rec("a", "acme"), rec("b", "acme"), rec("c", "acme")];
    let refs: Vec<&Record> = same.iter().collect();
    assert_eq!(name_classes(&refs, &schema, 1.0), vec![0, 0, 0]);
    let apart = [rec("a", "acme"), rec("b", "zenith"), rec("c", "blue moon")];
    let refs: Vec<&Record> = apart.iter().collect();
    assert_eq!(name_classes(&refs, &schema, 0.95), vec![0, 1, 2]);
}

#[test]
fn listings20_cliques() {
    let g = build_graph(&listings20_dataset(), 0.95).unwrap();
    assert!(g.is_consistent());
    let mut expected = vec![
        range(1, 5),
        range(3, 7),
        ids(&["r11", "r12", "r13"]),
        range(12, 15),
        ids(&["r13", "r16", "r17", "r18"]),
    ];
    expected.sort();
    assert_eq!(g.clique_record_sets(), expected);
    let sources: BTreeMap<Vec<String>, (String, String)> = g
        .cliques()
        .iter()
        .enumerate()
        .map(|(i, c)| (g.clique_records(i), (c.attribute.clone(), c.value.clone())))
        .collect();
    assert_eq!(sources[&range(1, 5)], ("phone".into(), "808".into()));
    assert_eq!(sources[&range(3, 7)], ("url".into(), "homedepot".into()));
    assert_eq!(
        sources[&ids(&["r13", "r16", "r17", "r18"])],
        ("url".into(), "tacocasatexas".into())
    );
}

#[test]
fn record_with_other_name_class_is_not_joined() {
    // r8 shares homedepot but sits in a different name class; r9 shares 808.
    let g = build_graph(&listings20_dataset(), 0.95).unwrap();
    let r8 = g.records().iter().position(|r| r == "r8").unwrap();
    let r9 = g.records().iter().position(|r| r == "r9").unwrap();
    assert!(g.cliques_of(r8).is_empty());
    assert!(g.cliques_of(r9).is_empty());
}

#[test]
fn no_shared_values_gives_no_cliques() {
    let ds = listings20_dataset();
    let picked: Vec<usize> = ["r1", "r11", "r19", "r20"]
        .iter()
        .map(|id| ds.records().iter().position(|r| r.id == *id).unwrap())
        .collect();
    let g = build_graph(&ds.subset(&picked), 0.95).unwrap();
    assert!(g.cliques().is_empty());
    assert_eq!(g.index_entries(), 0);
}

#[test]
fn simplified_index_of_listings20() {
    let g = simplify(&build_graph(&listings20_dataset(), 0.95).unwrap());
    assert!(g.is_consistent());
    assert_eq!(g.index_entries(), 10);
    let mut labels: Vec<String> = (0..g.node_count())
        .filter(|&n| !g.cliques_of(n).is_empty())
        .map(|n| g.node_label(n))
        .collect();
    labels.sort();
    let mut expected = ids(&[
        "r1/2",
        "r3",
        "r4",
        "r5",
        "r6/7",
        "r11",
        "r12",
        "r13",
        "r14/15",
        "r16/17/18",
    ]);
    expected.sort();
    assert_eq!(labels, expected);
    let rep = (0..g.node_count())
        .find(|&n| g.node_label(n) == "r16/17/18")
        .unwrap();
    assert_eq!(g.multiplicity(rep), 3);
}

#[test]
fn simplify_trivial_cases() {
    let (labels, cliques) = crate::fixtures::robust_g1();
    let g = SimilarityGraph::from_cliques(labels, cliques);
    assert_eq!(simplify(&g), g);

    let g = SimilarityGraph::from_cliques(ids(&["a", "b", "c", "d"]), vec![vec![0, 1, 2, 3]]);
    let s = simplify(&g);
    assert_eq!(s.node_count(), 1);
    assert_eq!(s.multiplicity(0), 4);
    assert!(s.is_consistent());
}

#[test]
fn dump_is_stable() {
    let g = build_graph(&listings20_dataset(), 0.95).unwrap();
    let mut a = Vec::new();
    g.dump(&mut a).unwrap();
    let mut b = Vec::new();
    simplify(&g).dump(&mut b).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let first = text.lines().next().unwrap();
    let cols: Vec<&str> = first.split('\t').collect();
    assert_eq!(cols.len(), 3);
    assert_eq!(cols[1], "phone=808");
    assert_eq!(cols[2], "r1,r2,r3,r4,r5");
    assert_eq!(cols[0].len(), 16);
}

#[test]
fn from_cliques_prunes() {
    let g = SimilarityGraph::from_cliques(
        ids(&["a", "b", "c", "d"]),
        vec![vec![0, 1], vec![0, 1, 2], vec![3], vec![2, 1, 0]],
    );
    assert_eq!(g.cliques().len(), 1);
    assert_eq!(g.cliques()[0].members, vec![0, 1, 2]);
}

fn shuffled_listings20(seed: u64) -> Dataset {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let ds = listings20_dataset();
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    ds.subset(&order)
}

proptest! {
    #[test]
    fn build_is_order_independent(seed in any::<u64>()) {
        let base = build_graph(&listings20_dataset(), 0.95).unwrap();
        let g = build_graph(&shuffled_listings20(seed), 0.95).unwrap();
        prop_assert_eq!(&g, &base);
    }

    #[test]
    fn random_graphs_stay_consistent(
        raw in proptest::collection::vec(proptest::collection::vec(0usize..9, 1..6), 0..6)
    ) {
        let labels: Vec<String> = (0..9).map(|i| format!("n{i}")).collect();
        let g = SimilarityGraph::from_cliques(labels, raw);
        prop_assert!(g.is_consistent());
        let s = simplify(&g);
        prop_assert!(s.is_consistent());
        prop_assert_eq!(s.clique_record_sets(), g.clique_record_sets());
        let total: usize = (0..s.node_count()).map(|n| s.multiplicity(n)).sum();
        prop_assert_eq!(total, 9);
    }
}
