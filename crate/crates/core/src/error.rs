use thiserror::Error;

/// Errors raised by estimation, tuning and inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,

    #[error("non-finite {what} at row {row}")]
    NonFinite { what: &'static str, row: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("kappa must be at least 1 (got {kappa} in dimension {dim})")]
    InvalidKappa { dim: usize, kappa: usize },

    #[error("covariate {dim} has zero range; cannot build a partition")]
    DegenerateSupport { dim: usize },

    #[error("quantile spacing with kappa={kappa} needs at least {} observations, got {n}", kappa + 1)]
    TooFewForQuantiles { kappa: usize, n: usize },

    #[error("point {value} lies outside the support [{lo}, {hi}] in dimension {dim}")]
    OutOfSupport { dim: usize, value: f64, lo: f64, hi: f64 },

    #[error("derivative order {deriv} must be strictly below the basis order {order}")]
    DerivativeOrder { deriv: usize, order: usize },

    #[error("invalid basis specification: {0}")]
    InvalidBasis(String),

    #[error("basis dimension {k} exceeds the sample size {n}; reduce kappa or the basis order")]
    Underdetermined { k: usize, n: usize },

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("bias correction {0} requires an auxiliary higher-order fit")]
    MissingAuxFit(u8),

    #[error("main and auxiliary fits must share the same partition")]
    PartitionMismatch,

    #[error("{0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
