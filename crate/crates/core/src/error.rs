use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed tensor structure: {0}")]
    MalformedStructure(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("state has no system/ancilla bipartition")]
    MissingBipartition,

    #[error("empty factor set")]
    EmptyKeep,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("post-selected states do not commute (max commutator norm {max_norm:.3e})")]
    NonCommuting { max_norm: f64 },

    #[error("coefficients not normalized (sum of squared moduli = {0})")]
    Unnormalized(f64),

    #[error("dimension overflow: {0}")]
    Overflow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Kraus operators are not trace preserving (residual {0:.3e})")]
    NotTracePreserving(f64),

    #[error("declared topology {declared} inconsistent with loop-parity analysis ({found})")]
    TopologyMismatch { declared: String, found: String },

    #[error("light-cone fit under-determined: {0} usable points, need at least 4")]
    FitUnderdetermined(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
