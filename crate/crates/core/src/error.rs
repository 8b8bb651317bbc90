use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing metadata file {0}")]
    MissingMetadata(PathBuf),

    #[error("trial {trial}: expected {expected} channels, found {found}")]
    ChannelMismatch {
        trial: String,
        expected: usize,
        found: usize,
    },

    #[error("trial {trial}, row {row}: non-numeric sample {value:?}")]
    NonNumeric {
        trial: String,
        row: usize,
        value: String,
    },

    #[error("inconsistent sample rate: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("schema mismatch: model trained on {expected:?}, got {found:?}")]
    SchemaMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("unknown format {0:?}")]
    UnknownFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
