use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("station index {index} out of range (network has {len} stations)")]
    StationIndex { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("time-window generation failed for customer {customer}: earliest {earliest_s:.1} s exceeds latest {latest_s:.1} s")]
    WindowGeneration {
        customer: usize,
        earliest_s: f64,
        latest_s: f64,
    },

    #[error("malformed trip: {0}")]
    Structure(String),

    #[error("search too large: estimated {estimate:.3e} states exceeds budget {budget:.3e}")]
    SearchTooLarge { estimate: f64, budget: f64 },

    #[error("model too large: {columns} columns exceeds limit {limit}")]
    ModelTooLarge { columns: usize, limit: usize },

    #[error("solution mapping error: {0}")]
    Mapping(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
