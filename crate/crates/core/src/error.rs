use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Evaluation point outside the function's interval.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The requested arithmetic mode is not available for these inputs.
    #[error("mode error: {0}")]
    Mode(String),

    #[error("adaptive quadrature did not converge: estimate {estimate} with error {error_estimate} after {subdivisions} panels")]
    Convergence {
        estimate: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    /// A theorem hypothesis (concavity, monotonicity, boundary conditions) is not certified.
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("weight slopes are not non-increasing: {0}")]
    Concavity(String),

    /// Zero weight or zero function, for which the quotient is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("optimizer failed: {0}")]
    NonConvergence(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("internal error: {0}")]
    Internal(String),
}
