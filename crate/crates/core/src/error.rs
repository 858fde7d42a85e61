use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("need at least 2 observations, got {0}")]
    TooFewRows(usize),

    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(f64),

    #[error("incompatible paths: dimension {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unknown path kind `{0}` (expected line, paper_2d, cos_exp or gp_rbf)")]
    UnknownKind(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("not a valid PSD 2x2 block: ({v11}, {v12}, {v22})")]
    InvalidPsd { v11: f64, v12: f64, v22: f64 },

    #[error("invalid tabulated activation: {0}")]
    InvalidActivation(String),

    #[error("covariance left the PSD cone at step {step}")]
    PsdBreakdown { step: usize },

    #[error("covariance left the PSD cone at grid point ({m}, {n})")]
    SurfaceBreakdown { m: usize, n: usize },

    #[error("RBF Gram matrix is not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("non-finite hidden state at layer {layer}")]
    NonFinite { layer: usize },

    #[error("operation requires {expected} weights")]
    ModeMismatch { expected: &'static str },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("realization {index}: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad
    /// input), i.e. the cases a caller should report as a numerical breakdown.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::PsdBreakdown { .. }
            | Error::SurfaceBreakdown { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NonFinite { .. } => true,
            Error::Pair { source, .. } | Error::Realization { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at_pair(self, i: usize, j: usize) -> Error {
        Error::Pair {
            i,
            j,
            source: Box::new(self),
        }
    }
}
