use thiserror::Error;

/// Errors raised by the chaos toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("order mismatch: expected {expected}, found {found}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("invalid contraction order {p} for tensors of orders {n} and {m}")]
    InvalidContraction { p: usize, n: usize, m: usize },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate model or grid: {0}")]
    Degenerate(String),

    #[error("kernel is not symmetric (max asymmetry {asymmetry:e})")]
    NonSymmetricKernel { asymmetry: f64 },

    #[error("sample too small: need at least {needed}, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
