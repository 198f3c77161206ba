//! Synthetic business listings with planted chains.
//!
//! Each chain has a name, a primary phone and a primary URL. A record of a
//! chain carries both primaries, except that some records swap one of them
//! for a local value. Errors are injected per record: a name borrowed from
//! another chain, the URL of a sibling chain, or a missing dominant value.
//!
//! Chains can be grouped into families that share one exact name. Within a
//! family, chains pair up (first with second, third with fourth, ...) and
//! the first of each pair can be given correlated errors: a fixed share of
//! its records carries its partner's primary URL, the pattern seen in
//! listings of related franchises.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Attribute, AttributeRole, Dataset, GoldStandard, Record, Schema};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeDistribution {
    Uniform,
    /// Log-uniform: many small chains, a few large ones.
    LogUniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub chains: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub sizes: SizeDistribution,
    /// Listings that belong to no chain.
    pub singletons: usize,
    /// Consecutive chains sharing one name.
    pub family_size: usize,
    /// Chance that a chain record replaces its phone or its URL with a
    /// local value.
    pub local_rate: f64,
    /// Chance of a one-letter variation of the chain name.
    pub name_variant_rate: f64,
    /// Chance that a record carries the name of an unrelated chain.
    pub wrong_name_rate: f64,
    /// Chance that a record carries another chain's primary URL, taken from
    /// its own family when it has one.
    pub wrong_url_rate: f64,
    /// Chance, per dominant attribute, that the value is missing.
    pub null_dominant_rate: f64,
    /// Share of the records of the first chain of each pair in a family
    /// (rounded, at least one when positive) carrying the partner's URL.
    pub correlated_url_share: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            chains: 30,
            min_size: 2,
            max_size: 308,
            sizes: SizeDistribution::LogUniform,
            singletons: 503,
            family_size: 1,
            local_rate: 0.1,
            name_variant_rate: 0.05,
            wrong_name_rate: 0.0,
            wrong_url_rate: 0.0,
            null_dominant_rate: 0.0,
            correlated_url_share: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("local_rate", self.local_rate),
            ("name_variant_rate", self.name_variant_rate),
            ("wrong_name_rate", self.wrong_name_rate),
            ("wrong_url_rate", self.wrong_url_rate),
            ("null_dominant_rate", self.null_dominant_rate),
            ("correlated_url_share", self.correlated_url_share),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!(
                    "synth.{name} must be in [0, 1], got {v}"
                )));
            }
        }
        if self.min_size < 2 || self.min_size > self.max_size {
            return Err(Error::Config(format!(
                "synth chain sizes need 2 <= min_size <= max_size, got {}..{}",
                self.min_size, self.max_size
            )));
        }
        if self.family_size == 0 {
            return Err(Error::Config("synth.family_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Columns of generated data: name (common), phone and URL (dominant),
/// location and category (multi-value).
pub fn synth_schema() -> Schema {
    Schema::new(vec![
        Attribute::new("name", AttributeRole::CommonValue, false),
        Attribute::new("phone", AttributeRole::DominantValue, false),
        Attribute::new("url", AttributeRole::DominantValue, true),
        Attribute::new("location", AttributeRole::MultiValue, false),
        Attribute::new("category", AttributeRole::MultiValue, false),
    ])
    .expect("synthetic schema is valid")
}

const ONSETS: [&str; 18] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "st", "ch",
];
const VOWELS: [&str; 7] = ["a", "e", "i", "o", "u", "ai", "ou"];
const NOUNS: [&str; 24] = [
    "bakery",
    "bank",
    "books",
    "cafe",
    "cleaners",
    "clinic",
    "dental",
    "diner",
    "florist",
    "fitness",
    "grill",
    "hardware",
    "insurance",
    "market",
    "motors",
    "optical",
    "pharmacy",
    "pizza",
    "realty",
    "salon",
    "storage",
    "supply",
    "tires",
    "travel",
];
const STATES: [&str; 20] = [
    "al", "ak", "az", "ca", "co", "fl", "ga", "il", "in", "md", "mi", "nj", "ny", "nc", "oh", "pa",
    "sd", "tx", "wa", "wv",
];

struct Chain {
    name: String,
    phone: String,
    url: String,
    category: &'static str,
}

struct Generator {
    rng: ChaCha8Rng,
    names: BTreeSet<String>,
    phones: BTreeSet<String>,
    locals: usize,
}

impl Generator {
    fn word(&mut self) -> String {
        let syllables = self.rng.gen_range(2..=3);
        (0..syllables)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS.choose(&mut self.rng).unwrap(),
                    VOWELS.choose(&mut self.rng).unwrap()
                )
            })
            .collect()
    }

    fn name(&mut self) -> String {
        loop {
            let name = format!(
                "{} {} {}",
                self.word(),
                self.word(),
                NOUNS.choose(&mut self.rng).unwrap()
            );
            if self.names.insert(name.clone()) {
                return name;
            }
        }
    }

    fn phone(&mut self) -> String {
        loop {
            let p = format!(
                "{:03}{:07}",
                self.rng.gen_range(200..1000),
                self.rng.gen_range(0..10_000_000)
            );
            if self.phones.insert(p.clone()) {
                return p;
            }
        }
    }

    fn local_url(&mut self, base: &str) -> String {
        self.locals += 1;
        format!("{base}-{}", self.locals)
    }

    fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.gen_bool(p)
    }

    /// Replaces one letter in the second half of `name`.
    fn variant(&mut self, name: &str) -> String {
        let chars: Vec<char> = name.chars().collect();
        let slots: Vec<usize> = (chars.len() / 2..chars.len())
            .filter(|&i| chars[i].is_ascii_lowercase())
            .collect();
        let Some(&at) = slots.choose(&mut self.rng) else {
            return name.to_string();
        };
        let mut out = chars;
        let old = out[at];
        while out[at] == old {
            out[at] = self.rng.gen_range(b'a'..=b'z') as char;
        }
        out.into_iter().collect()
    }

    fn size(&mut self, spec: &SynthSpec) -> usize {
        match spec.sizes {
            SizeDistribution::Uniform => self.rng.gen_range(spec.min_size..=spec.max_size),
            SizeDistribution::LogUniform => {
                let (lo, hi) = (
                    (spec.min_size as f64).ln(),
                    ((spec.max_size + 1) as f64).ln(),
                );
                (self.rng.gen_range(lo..hi).exp() as usize).clamp(spec.min_size, spec.max_size)
            }
        }
    }
}

fn slug(name: &str) -> String {
    name.chars().filter(char::is_ascii_alphanumeric).collect()
}

fn set(value: Option<String>) -> BTreeSet<String> {
    value.into_iter().collect()
}

/// Generates a dataset and its planted groups. Deterministic per seed.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(Dataset, GoldStandard)> {
    spec.validate()?;
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        names: BTreeSet::new(),
        phones: BTreeSet::new(),
        locals: 0,
    };

    let mut chains: Vec<Chain> = Vec::with_capacity(spec.chains);
    for c in 0..spec.chains {
        let member = c % spec.family_size;
        let name = if member == 0 {
            g.name()
        } else {
            chains[c - member].name.clone()
        };
        let url = if spec.family_size > 1 {
            format!("{}-{member}", slug(&name))
        } else {
            slug(&name)
        };
        let phone = g.phone();
        let category = NOUNS
            .iter()
            .find(|n| name.ends_with(*n))
            .copied()
            .unwrap_or("store");
        chains.push(Chain {
            name,
            phone,
            url,
            category,
        });
    }

    // (values, planted group)
    let mut rows: Vec<(Vec<BTreeSet<String>>, String)> = Vec::new();
    for (c, chain) in chains.iter().enumerate() {
        let family = c / spec.family_size;
        let siblings: Vec<usize> = (0..spec.chains)
            .filter(|&o| o != c && (spec.family_size == 1 || o / spec.family_size == family))
            .collect();
        let strangers: Vec<usize> = (0..spec.chains)
            .filter(|&o| o / spec.family_size != family)
            .collect();
        let size = g.size(spec);
        let partner = c + 1;
        let correlated = if spec.correlated_url_share > 0.0
            && (c % spec.family_size).is_multiple_of(2)
            && partner < spec.chains
            && partner / spec.family_size == family
        {
            ((spec.correlated_url_share * size as f64).round() as usize).max(1)
        } else {
            0
        };
        for i in 0..size {
            let mut name = chain.name.clone();
            if g.chance(spec.name_variant_rate) {
                name = g.variant(&name);
            }
            if !strangers.is_empty() && g.chance(spec.wrong_name_rate) {
                name = chains[*strangers.choose(&mut g.rng).unwrap()].name.clone();
            }
            let (mut phone, mut url) = (Some(chain.phone.clone()), Some(chain.url.clone()));
            if g.chance(spec.local_rate) {
                if g.rng.gen_bool(0.5) {
                    phone = Some(g.phone());
                } else {
                    url = Some(g.local_url(&chain.url));
                }
            }
            if !siblings.is_empty() && g.chance(spec.wrong_url_rate) {
                url = Some(chains[*siblings.choose(&mut g.rng).unwrap()].url.clone());
            }
            if i < correlated {
                url = Some(chains[partner].url.clone());
            }
            if g.chance(spec.null_dominant_rate) {
                phone = None;
            }
            if g.chance(spec.null_dominant_rate) {
                url = None;
            }
            let location = STATES.choose(&mut g.rng).unwrap().to_string();
            let values = vec![
                set(Some(name)),
                set(phone),
                set(url),
                set(Some(location)),
                set(Some(chain.category.into())),
            ];
            rows.push((values, format!("chain-{c}")));
        }
    }
    for s in 0..spec.singletons {
        let name = g.name();
        let phone = g.phone();
        let url = slug(&name);
        let category = NOUNS
            .iter()
            .find(|n| name.ends_with(*n))
            .copied()
            .unwrap_or("store")
            .to_string();
        let location = STATES.choose(&mut g.rng).unwrap().to_string();
        let values = vec![
            set(Some(name)),
            set(Some(phone)),
            set(Some(url)),
            set(Some(location)),
            set(Some(category)),
        ];
        rows.push((values, format!("single-{s}")));
    }

    rows.shuffle(&mut g.rng);
    let width = rows.len().to_string().len();
    let mut gold = GoldStandard::new();
    let records = rows
        .into_iter()
        .enumerate()
        .map(|(i, (values, group))| {
            let id = format!("s{:0width$}", i + 1);
            gold.insert(id.clone(), group);
            Record { id, values }
        })
        .collect();
    Ok((Dataset::new(synth_schema(), records)?, gold))
}
