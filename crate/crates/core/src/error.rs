use alloc::string::String;

/// Errors raised by the core engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A feature value was NaN or infinite; the solution is discarded.
    #[error("non-finite feature value {value} in dimension {dim}")]
    NonFiniteFeature { dim: usize, value: f64 },

    /// Feature vector length does not match the archive.
    #[error("expected {expected} feature values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Structurally invalid configuration (bounds, bins, names, counts).
    #[error("configuration error: {0}")]
    Config(String),

    /// Too few or malformed samples for fitting.
    #[error("invalid feature samples: {0}")]
    Samples(String),

    /// Every genotype of the initial population generated an invalid level.
    #[error("none of the {0} initial genotypes produced a valid level")]
    NoValidLevels(usize),

    /// No stage-1 solution falls inside the target region.
    #[error("stage-2 archive is empty after rebounding to the target region")]
    EmptyStage2,

    /// Operation requires at least one elite.
    #[error("archive is empty")]
    EmptyArchive,

    /// Covariance adaptation produced a non-finite or indefinite state.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
