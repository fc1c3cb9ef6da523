use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: String },

    #[error("cannot parse {value:?} as a number at row {row}, column {column}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label must be 0 or 1, got {value} at row {row}")]
    BadLabel { row: usize, value: f64 },

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("partition needs n >= 4B, got n = {n}, B = {bags}")]
    PartitionTooSmall { n: usize, bags: usize },

    #[error("k = {k} out of range, must be in 1..={max}")]
    InvalidK { k: usize, max: usize },

    #[error("AUC needs both classes present in the labels")]
    SingleClass,

    #[error("weights are not on the probability simplex: {0}")]
    NotSimplex(String),

    #[error("unsupported model format version {0}")]
    ModelVersion(u32),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
