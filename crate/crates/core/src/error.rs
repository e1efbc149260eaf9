use thiserror::Error;

/// Errors raised by geometry, quadrature and spectral routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("branch index {index} out of range (domain has {count} branches)")]
    BranchIndex { index: usize, count: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("factorization failed: nonpositive pivot {pivot:e} at row {row}")]
    Factorization { row: usize, pivot: f64 },

    #[error("eigensolver stopped after {applications} operator applications; worst residual {residual:e}")]
    NonConvergence { applications: usize, residual: f64 },

    #[error("bracket [{lo}, {hi}] does not change sign (f(lo) = {f_lo:e}, f(hi) = {f_hi:e})")]
    BracketInvalid { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("no positive root: {0}")]
    NoRoot(String),

    #[error("threshold η requires equal σ_i, got {0:?}")]
    UnequalSigma(Vec<f64>),

    #[error("series tail not summable at tolerance: {0}")]
    Series(String),
}

pub type Result<T> = std::result::Result<T, Error>;
