use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::fixtures::{listings20_dataset, listings20_gold, listings20_schema};
use crate::grouping::groups_of;
use crate::robustcore::dump_cores;
use crate::schema::{write_dataset, ParseOptions};
use crate::simcore::string_sim;

fn ids(range: std::ops::RangeInclusive<u32>) -> Vec<String> {
    let mut out: Vec<String> = range.map(|i| format!("r{i}")).collect();
    out.sort();
    out
}

fn k1() -> LinkageParams {
    LinkageParams {
        k: 1,
        ..LinkageParams::default()
    }
}

fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

#[test]
fn listings20_blocks() {
    let ds = listings20_dataset();
    assert_eq!(block_by_name(&ds, 0.8), vec![ids(1..=10), ids(11..=20)]);
    // The Home Depot variants chain together above .8, the two brands do not.
    assert!(string_sim("home depot, the", "home depot - tools") >= 0.8);
    assert!(string_sim("home depot, the", "taco casa") < 0.8);
}

#[test]
fn blocking_edge_cases() {
    let ds = listings20_dataset();
    let exact = block_by_name(&ds, 1.0);
    assert_eq!(exact.len(), 5);
    assert!(exact.contains(&ids(11..=20)));
    assert!(exact.contains(&ids(1..=7)));

    let taco = ds.subset(&(10..20).collect::<Vec<_>>());
    assert_eq!(block_by_name(&taco, 0.95).len(), 1);
    assert!(block_by_name(&ds.subset(&[]), 0.8).is_empty());
}

#[test]
fn listings20_linkage() {
    let out = run_linkage(&listings20_dataset(), &k1(), 1).unwrap();
    let want = {
        let mut w = vec![
            ids(1..=10),
            ids(11..=15),
            ids(16..=18),
            ids(19..=19),
            ids(20..=20),
        ];
        w.sort();
        w
    };
    assert_eq!(groups_of(&out), want);
    let m = evaluate(&out, &listings20_gold()).unwrap();
    assert_eq!((m.precision, m.recall), (1.0, 1.0));
}

#[test]
fn k0_keeps_components_together() {
    let ds = listings20_dataset();
    let params = LinkageParams {
        k: 0,
        ..LinkageParams::default()
    };
    let out = run_linkage(&ds, &params, 1).unwrap();
    for graph in block_graphs(&ds, &params, 1).unwrap() {
        for clique in graph.clique_record_sets() {
            let groups: std::collections::BTreeSet<&String> =
                clique.iter().map(|id| &out[id]).collect();
            assert_eq!(groups.len(), 1, "{clique:?}");
        }
    }
    // r11..r18 are connected through r13's second URL.
    assert_eq!(out["r11"], out["r16"]);
}

#[test]
fn empty_dataset() {
    let ds = listings20_dataset().subset(&[]);
    assert!(run_linkage(&ds, &LinkageParams::default(), 1)
        .unwrap()
        .is_empty());
}

#[test]
fn parallel_matches_serial() {
    let (ds, _) = generate_synthetic(&SynthSpec {
        chains: 12,
        max_size: 40,
        singletons: 30,
        ..Default::default()
    })
    .unwrap();
    let params = LinkageParams::default();
    assert_eq!(
        run_linkage(&ds, &params, 1).unwrap(),
        run_linkage(&ds, &params, 4).unwrap()
    );
    assert_eq!(
        block_cores(&ds, &params, 1).unwrap(),
        block_cores(&ds, &params, 3).unwrap()
    );
}

#[test]
fn cluster_stage_from_core_dump() {
    let ds = listings20_dataset();
    let cores = block_cores(&ds, &k1(), 1).unwrap();
    let mut dump = Vec::new();
    dump_cores(&cores, &mut dump).unwrap();
    let parsed = parse_cores(dump.as_slice()).unwrap();
    assert_eq!(parsed, cores);
    assert_eq!(
        cluster_with_cores(&ds, &parsed, &k1(), 1).unwrap(),
        run_linkage(&ds, &k1(), 1).unwrap()
    );

    let foreign = vec![crate::robustcore::KCore {
        records: vec!["r1".into(), "r11".into()],
        k: 1,
    }];
    assert!(matches!(
        cluster_with_cores(&ds, &foreign, &k1(), 1),
        Err(Error::CoreSpansBlocks(_))
    ));
    let unknown = vec![crate::robustcore::KCore {
        records: vec!["r1".into(), "x".into()],
        k: 1,
    }];
    assert!(
        matches!(cluster_with_cores(&ds, &unknown, &k1(), 1), Err(Error::IdMismatch(v)) if v == ["x"])
    );
    assert!(matches!(
        parse_cores("abc\t1\tr1\n".as_bytes()),
        Err(Error::MalformedRow { row: 1, .. })
    ));
    assert!(matches!(
        parse_cores("abc\tx\tr1,r2\n".as_bytes()),
        Err(Error::MalformedRow { .. })
    ));
}

#[test]
fn metrics_examples() {
    let gold = map(&[("a", "g"), ("b", "g"), ("c", "g")]);
    let m = evaluate(&gold, &gold).unwrap();
    assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));

    let pred = map(&[("a", "x"), ("b", "x"), ("c", "y")]);
    let m = evaluate(&pred, &gold).unwrap();
    assert_eq!((m.tp, m.fp, m.fn_), (1, 0, 2));
    assert_eq!(m.precision, 1.0);
    assert!((m.recall - 1.0 / 3.0).abs() < 1e-12);
    assert!((m.f1 - 0.5).abs() < 1e-12);
    assert_eq!(
        m.to_string(),
        "precision=1.0000 recall=0.3333 f1=0.5000 tp=1 fp=0 fn=2"
    );

    let single = map(&[("a", "1"), ("b", "2")]);
    let m = evaluate(&single, &map(&[("a", "p"), ("b", "q")])).unwrap();
    assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));

    let err = evaluate(
        &map(&[("a", "1"), ("z", "1")]),
        &map(&[("a", "1"), ("b", "1")]),
    )
    .unwrap_err();
    assert!(matches!(err, Error::IdMismatch(v) if v == ["b", "z"]));
}

#[test]
fn synthetic_random_shape() {
    let spec = SynthSpec::default();
    let (ds, gold) = generate_synthetic(&spec).unwrap();
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for g in gold.values() {
        *sizes.entry(g).or_default() += 1;
    }
    let chains: Vec<usize> = sizes
        .iter()
        .filter(|(g, _)| g.starts_with("chain-"))
        .map(|(_, &n)| n)
        .collect();
    assert_eq!(chains.len(), 30);
    assert!(chains.iter().all(|n| (2..=308).contains(n)));
    assert_eq!(
        sizes.keys().filter(|g| g.starts_with("single-")).count(),
        503
    );
    assert_eq!(ds.len(), gold.len());
    assert_eq!(ds.len(), chains.iter().sum::<usize>() + 503);
}

#[test]
fn synthetic_is_deterministic() {
    let spec = SynthSpec {
        wrong_name_rate: 0.05,
        wrong_url_rate: 0.05,
        null_dominant_rate: 0.05,
        seed: 9,
        ..Default::default()
    };
    let bytes = |spec: &SynthSpec| {
        let (ds, gold) = generate_synthetic(spec).unwrap();
        let mut out = Vec::new();
        write_dataset(&mut out, &ds, &ParseOptions::default()).unwrap();
        crate::schema::write_assignment(&mut out, &gold).unwrap();
        out
    };
    assert_eq!(bytes(&spec), bytes(&spec));
    assert_ne!(
        bytes(&spec),
        bytes(&SynthSpec {
            seed: 10,
            ..spec.clone()
        })
    );
}

#[test]
fn clean_chains_share_a_primary() {
    let spec = SynthSpec {
        chains: 20,
        max_size: 60,
        singletons: 10,
        ..Default::default()
    };
    let (ds, gold) = generate_synthetic(&spec).unwrap();
    let schema = ds.schema();
    let (phone, url) = (
        schema.index_of("phone").unwrap(),
        schema.index_of("url").unwrap(),
    );
    let mut by_chain: BTreeMap<&str, Vec<&crate::schema::Record>> = BTreeMap::new();
    for r in ds.records() {
        by_chain.entry(gold[&r.id].as_str()).or_default().push(r);
    }
    for (chain, members) in by_chain.iter().filter(|(g, _)| g.starts_with("chain-")) {
        let top = |attr: usize| {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for r in members {
                for v in r.values(attr) {
                    *counts.entry(v).or_default() += 1;
                }
            }
            counts
                .into_iter()
                .max_by_key(|&(_, n)| n)
                .map(|(v, _)| v.to_string())
        };
        let (p, u) = (top(phone), top(url));
        for r in members {
            let shares = p.as_ref().is_some_and(|p| r.values(phone).contains(p))
                || u.as_ref().is_some_and(|u| r.values(url).contains(u));
            assert!(shares, "{chain}: {} holds no primary", r.id);
        }
    }
}

#[test]
fn clean_synthetic_is_recovered() {
    let spec = SynthSpec {
        chains: 40,
        max_size: 120,
        singletons: 60,
        seed: 3,
        ..Default::default()
    };
    let (ds, gold) = generate_synthetic(&spec).unwrap();
    let m = evaluate(
        &run_linkage(&ds, &LinkageParams::default(), 1).unwrap(),
        &gold,
    )
    .unwrap();
    assert!(m.f1 >= 0.99, "{m}");
}

#[test]
fn synthetic_spec_validation() {
    assert!(matches!(
        generate_synthetic(&SynthSpec {
            wrong_url_rate: 1.5,
            ..Default::default()
        }),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        generate_synthetic(&SynthSpec {
            min_size: 1,
            ..Default::default()
        }),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        generate_synthetic(&SynthSpec {
            family_size: 0,
            ..Default::default()
        }),
        Err(Error::Config(_))
    ));
}

const MINIMAL: &str = r#"
[schema]
attributes = [
    { name = "name", role = "common" },
    { name = "phone", role = "dominant" },
    { name = "url", role = "dominant", multi_valued = true },
    { name = "location", role = "multi" },
    { name = "category", role = "multi" },
]

[input]
path = "listings20.csv"
"#;

#[test]
fn minimal_config_uses_defaults() {
    let c = LinkageConfig::from_toml(MINIMAL).unwrap();
    assert_eq!(c.params, LinkageParams::default());
    assert_eq!(c.params.k, 2);
    assert_eq!(c.params.name_block_threshold, 0.8);
    assert_eq!(c.params.name_edge_threshold, 0.95);
    assert_eq!(c.params.grouping.alpha, 0.01);
    assert_eq!(c.params.grouping.beta, 0.02);
    assert_eq!(c.params.similarity.theta_th, 0.6);
    assert_eq!(c.params.similarity.p, 0.8);
    assert_eq!(c.run.threads, 1);
    assert_eq!(c.input.parse, ParseOptions::default());
    assert_eq!(c.schema().unwrap(), listings20_schema());
}

#[test]
fn config_overrides_and_errors() {
    let text = format!("{MINIMAL}delimiter = \"\\t\"\n\n[params]\nk = 1\n[params.grouping]\ntheta_s = 0.25\n[run]\nthreads = 3\n");
    let c = LinkageConfig::from_toml(&text).unwrap();
    assert_eq!(c.params.k, 1);
    assert_eq!(c.params.grouping.theta_s, 0.25);
    assert_eq!(c.params.grouping.theta_ini, 0.8);
    assert_eq!(c.input.parse.delimiter, '\t');
    assert_eq!(c.run.threads, 3);

    for bad in [
        format!("{MINIMAL}\n[params]\nname_block_threshold = 1.2\n"),
        format!("{MINIMAL}\n[params]\nspeed = 3\n"),
        format!("{MINIMAL}\n[run]\nthreads = 0\n"),
        format!("{MINIMAL}\n[params.grouping]\nalpha = 0.5\n"),
        "[schema]\nattributes = 3\n".to_string(),
    ] {
        let err = LinkageConfig::from_toml(&bad).unwrap_err();
        assert!(err.is_config(), "{bad}: {err}");
        assert_eq!(err.exit_code(), 2);
    }
    let no_schema = LinkageConfig::from_toml("[input]\npath = \"x.csv\"\n").unwrap();
    assert!(no_schema.schema().unwrap_err().is_config());
}

#[test]
fn config_paths_resolve_against_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("listings20.csv"),
        crate::fixtures::LISTINGS20_CSV,
    )
    .unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, MINIMAL).unwrap();
    let c = LinkageConfig::load(&cfg).unwrap();
    assert_eq!(c.input_path().unwrap(), dir.path().join("listings20.csv"));
    assert_eq!(c.read_dataset().unwrap().len(), 20);
    assert!(c.read_gold().unwrap_err().is_config());

    let missing =
        LinkageConfig::from_toml(&MINIMAL.replace("listings20.csv", "/nonexistent/x.csv")).unwrap();
    let err = missing.read_dataset().unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linkage_partitions_records(seed in 0u64..1000, k in 0usize..4) {
        let spec = SynthSpec {
            chains: 6, max_size: 25, singletons: 8, family_size: 2,
            local_rate: 0.2, wrong_name_rate: 0.05, wrong_url_rate: 0.05, null_dominant_rate: 0.05,
            seed, ..Default::default()
        };
        let (ds, _) = generate_synthetic(&spec).unwrap();
        let params = LinkageParams { k, ..LinkageParams::default() };
        let out = run_linkage(&ds, &params, 1).unwrap();
        let keys: Vec<&String> = out.keys().collect();
        let mut want: Vec<&String> = ds.records().iter().map(|r| &r.id).collect();
        want.sort();
        prop_assert_eq!(keys, want);
        prop_assert_eq!(&out, &run_linkage(&ds, &params, 1).unwrap());
        let groups = groups_of(&out);
        prop_assert_eq!(groups.iter().map(Vec::len).sum::<usize>(), ds.len());
    }
}
