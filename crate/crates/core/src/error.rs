use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("non-finite value at parameter index {index}: {context}")]
    NonFinite { index: usize, context: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("requirement {requested} exceeds deliverable capacity {max_deliverable}")]
    Infeasible {
        requested: f64,
        max_deliverable: f64,
    },

    #[error("replay buffer is empty")]
    EmptyBuffer,

    #[error("training diverged at iteration {iteration} (epsilon {epsilon}, gamma {gamma}): {reason}")]
    Diverged {
        iteration: usize,
        epsilon: f64,
        gamma: f64,
        reason: String,
    },

    #[error("forecaster loss became non-finite at epoch {epoch}")]
    ForecastDiverged { epoch: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
