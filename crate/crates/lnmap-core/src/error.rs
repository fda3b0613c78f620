//! Error type shared by the core modules.

use alloc::string::String;

/// Failure modes of the numeric core.
///
/// Everything is fatal: the algorithms here have no sensible way to limp
/// past a shape mismatch or a non-finite loss, so callers get one enum and
/// are expected to abort the run (the CLI maps these onto exit codes).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two operands disagree on dimensions.
    #[error("{op}: shape mismatch, {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    /// A construction received an inconsistent dimension or an empty extent.
    #[error("{what}: invalid dimension {value}")]
    InvalidDimension { what: &'static str, value: usize },

    /// A row that must be renormalised has (near-)zero norm.
    #[error("cannot renormalise row {row} ({token:?}): norm {norm:e} below 1e-12")]
    ZeroNormRow {
        row: usize,
        token: String,
        norm: f64,
    },

    /// A loss or gradient stopped being a number.
    #[error("non-finite {what} in {context}")]
    NonFinite { what: &'static str, context: String },

    /// An index-typed argument points outside its pool.
    #[error("{what}: index {index} out of range for size {size}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    /// A retrieval pool is too small for the requested neighbourhood.
    #[error("csls_k = {csls_k} exceeds pool size {pool}")]
    PoolTooSmall { csls_k: usize, pool: usize },

    /// A dictionary ended up empty where pairs are required.
    #[error("{context}: dictionary has no usable pairs")]
    EmptyDictionary { context: &'static str },

    /// Parameter payload does not match the model it is loaded into.
    #[error("parameter {name:?}: {reason}")]
    ParameterMismatch { name: String, reason: String },

    /// A serialized parameter blob is not in the expected format.
    #[error("malformed parameter payload at byte {offset}: {reason}")]
    MalformedPayload { offset: usize, reason: String },

    /// An iterative numeric routine failed to converge.
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
}
