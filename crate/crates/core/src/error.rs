use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid piecewise function: {0}")]
    InvalidFunction(String),

    #[error("quadrature did not reach tolerance {tol:e} within {panels} panels (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        tol: f64,
        panels: usize,
        estimate: f64,
        error: f64,
    },

    #[error("function is not strictly positive on {0}")]
    NotStrictlyPositive(String),

    #[error("function vanishes on a subset of (0, {0}) of positive measure")]
    NotPositiveOnPrefix(f64),

    #[error("unsupported phi: {0}")]
    UnsupportedPhi(String),

    #[error("unsupported statement: {0}")]
    UnsupportedStatement(String),

    #[error("unsupported functional: {0}")]
    UnsupportedFunctional(String),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("missing input constant: {0}")]
    MissingInput(String),

    #[error("hypothesis unsatisfied: {0}")]
    HypothesisUnsatisfied(String),

    #[error("every sampled ratio was degenerate (0/0 or x/inf)")]
    AllRatiosDegenerate,

    #[error("no upper bound available for {0}")]
    MissingUpperBound(String),

    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
