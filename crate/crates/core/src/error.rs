use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },

    #[error("pool mismatch at record {record}: {detail}")]
    PoolMismatch { record: usize, detail: String },

    #[error("embedding norm out of tolerance for query {query_id}: |e| = {norm}")]
    EmbeddingNorm { query_id: String, norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("duplicate query_id {0}")]
    DuplicateQueryId(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown model {0}")]
    UnknownModel(String),

    #[error("gold required: query {0} has no gold answer")]
    MissingGold(String),

    #[error("task {task} has {count} records; at least {required} required")]
    TaskTooSmall {
        task: String,
        count: usize,
        required: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Invariant violations are bugs; everything else traces back to input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}
