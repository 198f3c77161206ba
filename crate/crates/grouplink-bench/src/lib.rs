//! Shared inputs for the stage benchmarks.

use grouplink_core::pipeline::{generate_synthetic, SizeDistribution, SynthSpec};
use grouplink_core::{Dataset, GoldStandard};

/// About `records` listings in chains of 50 to 148, with 1% noise of each
/// kind.
pub fn noisy_chains(records: usize, seed: u64) -> (Dataset, GoldStandard) {
    let spec = SynthSpec {
        chains: records / 100,
        min_size: 50,
        max_size: 148,
        sizes: SizeDistribution::Uniform,
        singletons: records / 100,
        local_rate: 0.01,
        wrong_name_rate: 0.01,
        wrong_url_rate: 0.01,
        null_dominant_rate: 0.01,
        seed,
        ..Default::default()
    };
    generate_synthetic(&spec).expect("bench spec is valid")
}
