use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("regularization weight must be nonnegative, got {0}")]
    NegativeRegularization(f64),
    #[error("invalid feasible set: {0}")]
    InvalidSet(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("problem does not provide {0}")]
    Unsupported(&'static str),
    #[error("regularized objective is not strongly convex in x (q = {q}, gamma = {gamma})")]
    NotStronglyConvex { q: f64, gamma: f64 },
    #[error("invalid problem parameter: {0}")]
    InvalidParameter(String),
    #[error("dataset has no samples of class {0}")]
    DegenerateDataset(i8),
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("epoch length must be positive")]
    ZeroLength,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("theorem schedule inapplicable: {0}")]
    TheoremInapplicable(&'static str),
    #[error("rho = {rho} exceeds mu/8 = {limit}; use the theorem-1 schedule")]
    RegimeViolated { rho: f64, limit: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("inner solve did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("every PL sample fell inside the optimal region")]
    NoSamples,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}
