//! Process-level error type uniting core failures with artifact IO.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: expected key=value, got {text:?}")]
    ConfigSyntax {
        path: PathBuf,
        line: usize,
        text: String,
    },

    #[error("{path}:{line}: unknown config key {key:?}")]
    UnknownKey {
        path: PathBuf,
        line: usize,
        key: String,
    },

    #[error("{path}:{line}: {key} = {value:?}: {reason}")]
    BadValue {
        path: PathBuf,
        line: usize,
        key: String,
        value: String,
        reason: &'static str,
    },

    #[error("{path}: bad IDX magic: expected {expected:#010x}, found {found:#010x}")]
    IdxMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: IDX payload holds {found} bytes, header implies {expected}")]
    IdxLength {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{images} holds {image_count} images but {labels} holds {label_count} labels")]
    IdxMismatch {
        images: PathBuf,
        labels: PathBuf,
        image_count: usize,
        label_count: usize,
    },

    #[error("{path}: not a distib checkpoint (bad magic)")]
    CheckpointMagic { path: PathBuf },

    #[error("{path}: checkpoint is truncated or has trailing bytes")]
    CheckpointLength { path: PathBuf },

    #[error("{path}: checkpoint model shape disagrees with the config ({reason})")]
    CheckpointShape { path: PathBuf, reason: String },

    #[error("invalid --eps list {text:?}: {reason}")]
    BadEpsList { text: String, reason: &'static str },

    #[error("invalid --betas list {text:?}: {reason}")]
    BadBetaList { text: String, reason: &'static str },

    #[error("{0}")]
    Core(#[from] distib_core::error::Error),

    #[error("{context}: {source}")]
    CoreContext {
        context: String,
        #[source]
        source: distib_core::error::Error,
    },

    #[error("sweep finished with {failed} failed run(s); see stderr markers")]
    SweepFailures { failed: usize },

    #[error("identity check failed: {failures} of {trials} trials exceeded the 1e-9 gap")]
    IdentityGap { failures: u64, trials: u64 },

    #[error("non-finite metric {name} at epoch {epoch}; refusing to write CSV")]
    NonFiniteMetric { name: &'static str, epoch: usize },
}

/// Shorthand for IO errors carrying their path.
pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
