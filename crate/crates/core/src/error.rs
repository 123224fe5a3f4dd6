use thiserror::Error;

/// Errors raised by the group, grid and transform layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid element for group `{group}`: {reason}")]
    InvalidElement { group: String, reason: String },

    #[error("invalid grid range: {0}")]
    InvalidRange(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),

    #[error("windows are numerically orthogonal (|<u,u2>| = {inner:.3e}, bound {bound:.3e})")]
    NearOrthogonalWindows { inner: f64, bound: f64 },

    #[error("window has zero norm")]
    ZeroWindow,

    #[error("window slice at H-node {index} is degenerate (|g_h|^2 = {norm_sq:.3e})")]
    DegenerateWindowSlice { index: usize, norm_sq: f64 },

    #[error("field kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("signal has zero norm")]
    ZeroSignal,

    #[error("unknown group `{0}`")]
    UnknownGroup(String),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
