//! TOML run configuration. Every knob has a default, so a minimal file
//! names only the schema and the input path.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::synth::SynthSpec;
use crate::error::{Error, Result};
use crate::grouping::GroupingParams;
use crate::schema::{Attribute, ParseOptions, Schema};
use crate::simcore::SimilarityParams;

/// Algorithm parameters of a linkage run.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkageParams {
    /// Robustness level of the cores.
    pub k: usize,
    /// Names at least this similar (transitively) share a block.
    pub name_block_threshold: f64,
    /// Names at least this similar (transitively) may share a v-clique.
    pub name_edge_threshold: f64,
    pub similarity: SimilarityParams,
    pub grouping: GroupingParams,
}

impl Default for LinkageParams {
    fn default() -> Self {
        LinkageParams {
            k: 2,
            name_block_threshold: 0.8,
            name_edge_threshold: 0.95,
            similarity: SimilarityParams::default(),
            grouping: GroupingParams::default(),
        }
    }
}

impl LinkageParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("name_block_threshold", self.name_block_threshold),
            ("name_edge_threshold", self.name_edge_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        self.similarity.validate()?;
        self.grouping.validate()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSection {
    pub attributes: Vec<Attribute>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default)]
pub struct InputSection {
    /// Dataset to link.
    pub path: Option<PathBuf>,
    /// Gold standard, `record_id<TAB>group_id`.
    pub gold: Option<PathBuf>,
    #[serde(flatten)]
    pub parse: ParseOptions,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Worker threads for block-level parallelism; 1 runs inline.
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { threads: 1 }
    }
}

/// A parsed configuration file.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkageConfig {
    pub schema: Option<SchemaSection>,
    pub input: InputSection,
    pub params: LinkageParams,
    pub run: RunSection,
    pub synth: Option<SynthSpec>,
}

impl LinkageConfig {
    /// Parses TOML text. Relative paths stay as written.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: LinkageConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.params.validate()?;
        if config.run.threads == 0 {
            return Err(Error::Config("run.threads must be at least 1".into()));
        }
        if let Some(spec) = &config.synth {
            spec.validate()?;
        }
        Ok(config)
    }

    /// Reads a config file; relative input paths resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.input.path, &mut config.input.gold]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn schema(&self) -> Result<Schema> {
        let section = self
            .schema
            .as_ref()
            .ok_or_else(|| Error::Config("missing [schema] section".into()))?;
        Schema::new(section.attributes.clone())
    }

    pub fn input_path(&self) -> Result<&Path> {
        self.input
            .path
            .as_deref()
            .ok_or_else(|| Error::Config("missing input.path".into()))
    }

    pub fn gold_path(&self) -> Result<&Path> {
        self.input
            .gold
            .as_deref()
            .ok_or_else(|| Error::Config("missing input.gold".into()))
    }

    /// Loads the dataset named by `input.path`.
    pub fn read_dataset(&self) -> Result<crate::schema::Dataset> {
        let schema = self.schema()?;
        let path = self.input_path()?;
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        crate::schema::parse_dataset(std::io::BufReader::new(file), &schema, &self.input.parse)
    }

    /// Loads the gold standard named by `input.gold`.
    pub fn read_gold(&self) -> Result<crate::schema::GoldStandard> {
        let path = self.gold_path()?;
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        crate::schema::parse_gold(std::io::BufReader::new(file))
    }
}
