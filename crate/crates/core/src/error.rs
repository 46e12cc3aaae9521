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

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("{path}: {msg}")]
    Schema { path: PathBuf, msg: String },

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{stage} (channel {channel}{}): {source}", block.map(|b| format!(", block {b}")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        channel: String,
        block: Option<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite feature {column} at trial {trial}")]
    NonFinite { column: String, trial: usize },

    #[error("SMO did not converge after {iterations} iterations (max KKT violation {violation:.3e})")]
    NotConverged { iterations: usize, violation: f64 },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("study failed: {0}")]
    Study(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
