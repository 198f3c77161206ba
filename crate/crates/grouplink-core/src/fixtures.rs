//! Worked examples used by tests, benchmarks and the CLI's demo paths.

use crate::schema::{
    parse_dataset, parse_gold, Attribute, AttributeRole, Dataset, GoldStandard, ParseOptions,
    Schema,
};

/// The 20 business listings of the running example (two Home Depot
/// variants, two Taco Casa chains and two lone listings).
pub const LISTINGS20_CSV: &str = include_str!("../fixtures/listings20.csv");

/// Planted groups for [`LISTINGS20_CSV`].
pub const LISTINGS20_GOLD: &str = include_str!("../fixtures/listings20.gold");

/// Schema of the running example: name is common, phone and URL are
/// dominant, location and category are multi-value.
pub fn listings20_schema() -> Schema {
    Schema::new(vec![
        Attribute::new("name", AttributeRole::CommonValue, false),
        Attribute::new("phone", AttributeRole::DominantValue, false),
        Attribute::new("url", AttributeRole::DominantValue, true),
        Attribute::new("location", AttributeRole::MultiValue, false),
        Attribute::new("category", AttributeRole::MultiValue, false),
    ])
    .expect("fixture schema is valid")
}

pub fn listings20_dataset() -> Dataset {
    parse_dataset(
        LISTINGS20_CSV.as_bytes(),
        &listings20_schema(),
        &ParseOptions::default(),
    )
    .expect("fixture dataset parses")
}

pub fn listings20_gold() -> GoldStandard {
    parse_gold(LISTINGS20_GOLD.as_bytes()).expect("fixture gold parses")
}

/// A 2-robust graph of four v-cliques over `r1..r5` whose adjacent cliques
/// share one or two nodes. Node `i` stands for record `r{i+1}`.
pub fn robust_g1() -> (Vec<String>, Vec<Vec<usize>>) {
    (
        labels(5),
        vec![vec![0, 1, 2], vec![0, 2, 3], vec![0, 1, 4], vec![2, 3, 4]],
    )
}

/// Four v-cliques over `r1..r6` that meet the 3-overlap condition but fall
/// apart when `r3` and `r4` are removed.
pub fn fragile_g2() -> (Vec<String>, Vec<Vec<usize>>) {
    (
        labels(6),
        vec![vec![0, 1, 2], vec![0, 1, 3], vec![2, 4, 5], vec![3, 4, 5]],
    )
}

fn labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("r{i}")).collect()
}
