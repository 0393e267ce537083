use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("kernel support {radius} does not fit in the torus (must be < {limit})")]
    KernelSupport { radius: f64, limit: f64 },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("field has zero total mass")]
    ZeroMass,

    #[error("mass precondition fails: P = {mass} must exceed {required}")]
    MassPrecondition { mass: f64, required: f64 },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("invalid config value for `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("unknown preset `{name}`; available: {}", available.join(", "))]
    UnknownPreset { name: String, available: Vec<String> },

    #[error("malformed snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigValue {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
