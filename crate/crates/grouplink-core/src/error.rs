use std::path::PathBuf;

/// Errors raised anywhere in the engine.
///
/// Variants split into two families that the CLI maps to distinct exit
/// codes: problems with the data being read, and problems with how the
/// run was configured.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("row {row}: {message}")]
    MalformedRow { row: u64, message: String },

    #[error("row {row}: duplicate record id `{id}`")]
    DuplicateId { row: u64, id: String },

    #[error("unknown column `{0}` in header")]
    UnknownColumn(String),

    #[error("header has no `{0}` column")]
    MissingIdColumn(String),

    #[error("record ids missing on one side of the comparison: {}", .0.join(", "))]
    IdMismatch(Vec<String>),

    #[error("cannot build a signature from an empty record set")]
    EmptySignature,

    #[error("node {0} is not part of the subgraph")]
    NodeAbsent(usize),

    #[error("graph has {nodes} nodes, above the oracle bound of {bound}")]
    OracleBound { nodes: usize, bound: usize },

    #[error("core {0} spans more than one name block")]
    CoreSpansBlocks(String),

    #[error("SV-index of an empty clustering is undefined")]
    EmptyClustering,

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by configuration rather than input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Schema(_) | Error::Config(_))
    }

    /// Process exit code: 1 for input errors, 2 for configuration errors.
    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            2
        } else {
            1
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
