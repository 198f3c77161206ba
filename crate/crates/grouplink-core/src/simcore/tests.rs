use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::fixtures::{listings20_dataset, listings20_schema};

const PHONE: usize = 1;
const URL: usize = 2;

fn sig_of(ids: &[&str]) -> Signature {
    let ds = listings20_dataset();
    let recs = ds.records().iter().filter(|r| ids.contains(&r.id.as_str()));
    Signature::build(recs, ds.schema()).unwrap()
}

fn counts(attrs: usize, entries: &[(usize, &str, u32)]) -> Vec<BTreeMap<String, u32>> {
    let mut out = vec![BTreeMap::new(); attrs];
    for &(a, v, c) in entries {
        out[a].insert(v.to_string(), c);
    }
    out
}

#[test]
fn signature_weights_of_first_core() {
    let sig = sig_of(&["r1", "r2", "r3", "r4", "r5", "r6", "r7"]);
    assert_eq!(sig.record_count(), 7);
    assert_eq!(sig.weight(PHONE, "808"), 5.0 / 7.0);
    assert_eq!(sig.weight(PHONE, "101"), 1.0 / 7.0);
    assert_eq!(sig.weight(PHONE, "102"), 1.0 / 7.0);
    assert_eq!(sig.weight(URL, "homedepot"), 5.0 / 7.0);
    assert_eq!(sig.values(URL).count(), 1);
}

#[test]
fn singleton_signature_has_unit_weights() {
    let sig = sig_of(&["r8"]);
    for attr in 0..sig.attributes() {
        for (_, w) in sig.weights(attr) {
            assert_eq!(w, 1.0);
        }
    }
    let empty: Vec<&Record> = Vec::new();
    assert!(matches!(
        Signature::build(empty, &listings20_schema()),
        Err(Error::EmptySignature)
    ));
}

#[test]
fn sim_dom_worked_example() {
    // r8 against a cluster where homedepot has weight .71, then .14.
    let schema = listings20_schema();
    let params = SimilarityParams {
        p: 0.9,
        ..Default::default()
    };
    let e = sig_of(&["r8"]);
    let strong = Signature::from_counts(
        counts(5, &[(URL, "homedepot", 71), (PHONE, "808", 71)]),
        100,
    );
    let weak = Signature::from_counts(
        counts(5, &[(URL, "homedepot", 14), (PHONE, "808", 71)]),
        100,
    );
    assert!((sim_dom(&e, &strong, &schema, &params) - 0.639).abs() < 1e-3);
    assert!((sim_dom(&e, &weak, &schema, &params) - 0.126).abs() < 1e-3);
}

#[test]
fn sim_dom_without_dominant_values_is_zero() {
    let schema = listings20_schema();
    let e = Signature::from_counts(counts(5, &[(0, "taco casa", 1)]), 1);
    let cl = sig_of(&["r11", "r12", "r13"]);
    assert_eq!(sim_dom(&e, &cl, &schema, &SimilarityParams::default()), 0.0);
}

#[test]
fn sim_dom_fuzzy_threshold_admits_near_values() {
    let schema = listings20_schema();
    let e = sig_of(&["r11"]);
    let cl = sig_of(&["r16", "r17", "r18"]);
    let exact = SimilarityParams::default();
    let fuzzy = SimilarityParams {
        dominant_match_threshold: 0.9,
        ..Default::default()
    };
    assert_eq!(sim_dom(&e, &cl, &schema, &exact), 0.0);
    assert!(sim_dom(&e, &cl, &schema, &fuzzy) > 0.7);
}

#[test]
fn sim_com_rules() {
    let schema = listings20_schema();
    let same = sig_of(&["r1", "r2"]);
    assert_eq!(sim_com(&sig_of(&["r3"]), &same, &schema), 1.0);
    let nameless = Signature::from_counts(counts(5, &[(PHONE, "808", 1)]), 1);
    assert_eq!(sim_com(&nameless, &same, &schema), 0.0);
    assert_eq!(sim_com(&nameless, &nameless, &schema), 1.0);
    let usa = sig_of(&["r8"]);
    let expected = string_sim("home depot, usa", "home depot, the");
    assert!((sim_com(&usa, &same, &schema) - expected).abs() < 1e-12);
}

#[test]
fn sim_multi_jaccard() {
    let schema = Schema::new(vec![
        crate::schema::Attribute::new("name", crate::schema::AttributeRole::CommonValue, false),
        crate::schema::Attribute::new("phone", crate::schema::AttributeRole::DominantValue, false),
        crate::schema::Attribute::new("category", crate::schema::AttributeRole::MultiValue, true),
    ])
    .unwrap();
    let p = SimilarityParams::default();
    let one = Signature::from_counts(counts(3, &[(2, "restaurant", 1)]), 1);
    let two = Signature::from_counts(counts(3, &[(2, "restaurant", 1), (2, "food store", 1)]), 1);
    let other = Signature::from_counts(counts(3, &[(2, "furniture", 1)]), 1);
    let none = Signature::from_counts(counts(3, &[]), 1);
    assert_eq!(sim_multi(&one, &one, &schema, &p), 1.0);
    assert_eq!(sim_multi(&one, &other, &schema, &p), 0.0);
    assert_eq!(sim_multi(&one, &two, &schema, &p), 0.5);
    assert_eq!(sim_multi(&none, &none, &schema, &p), 0.0);
}

#[test]
fn combine_threshold_and_clamp() {
    let p = SimilarityParams::default();
    // sim_com = 1, sim_dom = 0 gives sim_s = .5, under theta_th.
    assert_eq!(combine(0.5, 1.0, &p), 0.5);
    assert_eq!(combine(1.0, 1.0, &p), 1.0);
    assert!((combine(0.6, 1.0, &p) - 0.7).abs() < 1e-12);
}

#[test]
fn name_only_match_gives_half() {
    let schema = listings20_schema();
    let p = SimilarityParams::default();
    let r19 = sig_of(&["r19"]);
    let texas = sig_of(&["r16", "r17", "r18"]);
    assert!((element_cluster_sim(&r19, &texas, None, &schema, &p) - 0.5).abs() < 1e-12);
}

#[test]
fn view_without_member_matches_rebuilt_signature() {
    let schema = listings20_schema();
    let p = SimilarityParams::default();
    let all = sig_of(&["r11", "r12", "r13", "r14", "r15"]);
    let r13 = sig_of(&["r13"]);
    let rest = sig_of(&["r11", "r12", "r14", "r15"]);
    let via_view = element_cluster_sim(&r13, SigView::without(&all, &r13), None, &schema, &p);
    let direct = element_cluster_sim(&r13, &rest, None, &schema, &p);
    assert!((via_view - direct).abs() < 1e-12);
}

#[test]
fn distinct_values_are_boosted() {
    let schema = listings20_schema();
    let p = SimilarityParams::default();
    let e = sig_of(&["r12"]);
    let cl = sig_of(&["r14", "r15", "r16"]);
    let plain = element_cluster_sim(&e, &cl, None, &schema, &p);
    let d = ValueDistinctness::from_clusters(5, [&cl]);
    let boosted = element_cluster_sim(&e, &cl, Some(&d), &schema, &p);
    assert!(boosted > plain);
    assert!(d.is_distinct(PHONE, "900"));
}

#[test]
fn params_validation() {
    assert!(SimilarityParams::default().validate().is_ok());
    assert!(SimilarityParams {
        p: 0.0,
        ..Default::default()
    }
    .validate()
    .is_err());
    assert!(SimilarityParams {
        theta_th: 1.5,
        ..Default::default()
    }
    .validate()
    .is_err());
    assert!(SimilarityParams {
        w_c: 0.0,
        w_o: 0.0,
        ..Default::default()
    }
    .validate()
    .is_err());
    assert!(SimilarityParams {
        distinct_boost: 0.5,
        ..Default::default()
    }
    .validate()
    .is_err());
}

fn word() -> impl Strategy<Value = String> {
    "[a-d ]{0,8}"
}

proptest! {
    #[test]
    fn string_sim_symmetric_bounded(a in word(), b in word()) {
        let s = string_sim(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((s - string_sim(&b, &a)).abs() < 1e-12);
        prop_assert_eq!(s == 1.0, a == b);
    }

    #[test]
    fn prefix_bonus_is_monotone(a in "[a-d]{1,7}", b in "[a-d]{1,7}") {
        let j = jaro_sim(&a, &b);
        let prefix = a.chars().zip(b.chars()).take(4).take_while(|(x, y)| x == y).count();
        let s = string_sim(&a, &b);
        prop_assert!(s + 1e-12 >= j);
        prop_assert!((s - (j + prefix as f64 * 0.1 * (1.0 - j))).abs() < 1e-12);
    }

    #[test]
    fn sim_dom_monotone_in_weight(base in 1u32..50, extra in 1u32..50) {
        let schema = listings20_schema();
        let p = SimilarityParams::default();
        let e = Signature::from_counts(counts(5, &[(URL, "u", 1)]), 1);
        let lo = Signature::from_counts(counts(5, &[(URL, "u", base)]), 100);
        let hi = Signature::from_counts(counts(5, &[(URL, "u", base + extra)]), 100);
        prop_assert!(sim_dom(&e, &hi, &schema, &p) >= sim_dom(&e, &lo, &schema, &p));
    }

    #[test]
    fn element_cluster_sim_in_unit_interval(
        ids in proptest::sample::subsequence((1..=20).map(|i| format!("r{i}")).collect::<Vec<_>>(), 1..8),
        pick in 1usize..=20,
    ) {
        let ds = listings20_dataset();
        let schema = ds.schema();
        let members: Vec<&str> = ids.iter().map(String::as_str).collect();
        let cl = sig_of(&members);
        let e = sig_of(&[format!("r{pick}").as_str()]);
        let d = ValueDistinctness::from_clusters(5, [&cl]);
        let s = element_cluster_sim(&e, &cl, Some(&d), schema, &SimilarityParams::default());
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn signature_weights_are_fractions(ids in proptest::sample::subsequence((1..=20).map(|i| format!("r{i}")).collect::<Vec<_>>(), 1..20)) {
        let members: Vec<&str> = ids.iter().map(String::as_str).collect();
        let sig = sig_of(&members);
        let ds = listings20_dataset();
        for attr in 0..sig.attributes() {
            for (v, w) in sig.weights(attr) {
                let tally = ds.records().iter()
                    .filter(|r| members.contains(&r.id.as_str()) && r.values(attr).contains(v))
                    .count();
                prop_assert!((w - tally as f64 / members.len() as f64).abs() < 1e-9);
                prop_assert!(w > 0.0 && w <= 1.0);
            }
        }
    }
}
