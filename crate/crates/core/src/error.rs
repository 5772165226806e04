use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller violated an operation's preconditions (shape mismatch,
    /// out-of-range message index, stale trace, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input is valid in shape but degenerate in value, e.g. normalizing
    /// the zero vector.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Training loss exceeded the divergence guard or became non-finite.
    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    TrainingDiverged { iteration: usize, loss: f64 },

    /// A detector could not produce a decision (e.g. near-singular channel
    /// matrix in zero-forcing). The trial is resampled and the failure
    /// counted in run metadata.
    #[error("detection failure: {0}")]
    DetectionFailure(String),

    /// Bad run configuration (config file, CLI flag combination, link
    /// payload mismatch).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed or incompatible checkpoint file.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
