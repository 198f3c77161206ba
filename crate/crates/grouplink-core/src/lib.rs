//! Group linkage: cluster records that belong to the same real-world group
//! (for example the branches of one business chain).
//!
//! Stage one builds a v-clique similarity graph and finds robust k-cores
//! with screening and max-flow splitting. Stage two clusters cores and the
//! remaining satellite records by greedy silhouette-index improvement.

pub mod error;
pub mod fixtures;
pub mod grouping;
pub mod pipeline;
pub mod robustcore;
pub mod schema;
pub mod simcore;
pub mod simgraph;

pub use error::{Error, Result};
pub use schema::{Attribute, AttributeRole, Dataset, GoldStandard, ParseOptions, Record, Schema};
pub use simcore::{Signature, SimilarityParams, ValueDistinctness};
