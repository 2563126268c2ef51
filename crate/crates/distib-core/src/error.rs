//! Error taxonomy shared by every module in the crate.

use alloc::vec::Vec;
use thiserror::Error;

/// Everything that can go wrong outside of programmer misuse.
///
/// Shape and contract violations carry enough context (operation name, both
/// shapes, offending index) to diagnose the call site without a debugger.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two operands disagree on shape for the named operation.
    #[error("{op}: shape mismatch: left {left:?}, right {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    /// An operation required a tensor of a specific rank or size.
    #[error("{op}: unsupported shape {shape:?}: {reason}")]
    BadShape {
        op: &'static str,
        shape: Vec<usize>,
        reason: &'static str,
    },

    /// Backward was asked to differentiate a non-scalar output.
    #[error("backward: output must be a scalar, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },

    /// A class label does not fit the declared number of classes.
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    /// KL divergence is undefined: q vanishes where p does not.
    #[error("kl: q is zero at outcome {index} where p = {p} > 0")]
    KlUnsupported { index: usize, p: f64 },

    /// A probability table failed validation.
    #[error("invalid distribution: {reason}")]
    InvalidDistribution { reason: &'static str },

    /// The declared parent structure contains a directed cycle.
    #[error("parent graph has a cycle through variable {variable}")]
    CyclicGraph { variable: usize },

    /// A joint does not factorize over its declared parent graph.
    #[error("joint deviates from its declared factorization by {max_dev:e}")]
    NotFactorized { max_dev: f64 },

    /// A configuration field holds an unusable value.
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig {
        field: &'static str,
        reason: &'static str,
    },

    /// An operation that needs at least one sample received none.
    #[error("{op}: dataset is empty")]
    EmptyDataset { op: &'static str },

    /// A support set is missing samples for one of its classes.
    #[error("no support samples for class {class}")]
    EmptySupport { class: usize },

    /// Training produced a non-finite loss term and aborted.
    #[error("non-finite {term} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss {
        term: &'static str,
        epoch: usize,
        batch: usize,
    },

    /// An IDX payload starts with the wrong magic number.
    #[error("idx: bad magic: expected {expected:#010x}, found {found:#010x}")]
    IdxBadMagic { expected: u32, found: u32 },

    /// An IDX payload is shorter or longer than its header promises.
    #[error("idx: header promises {expected} bytes, found {found}")]
    IdxLength { expected: usize, found: usize },

    /// Image and label files disagree on the number of records.
    #[error("idx: {images} images but {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    /// A precondition documented on the called operation was violated.
    #[error("{0}")]
    Contract(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
