use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed bundle: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("question kind `{kind}` is incompatible with this problem: {reason}")]
    IncompatibleQuestion { kind: String, reason: String },

    #[error("unknown action `{0}`")]
    UnknownAction(String),

    #[error("actions {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),

    #[error("adjacency graph is disconnected")]
    Disconnected,

    #[error("certificate does not fit: {0}")]
    Certificate(String),

    #[error("malformed splitting collection: {0}")]
    Collection(String),

    #[error("unsupported mechanism provenance for {0}")]
    UnsupportedProvenance(String),

    #[error("belief grid would hold {count} points (cap {cap}); use sampling instead")]
    GridTooLarge { count: u128, cap: u128 },

    #[error("enumeration guard exceeded: {0}")]
    Guard(String),
}

pub type Result<T> = std::result::Result<T, Error>;
