use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the model.
    #[error("domain error: {0}")]
    Domain(String),

    /// The 3x3 Sylvester system for a symmetric unknown is singular
    /// (two eigenvalues of the coefficient matrix sum to zero).
    #[error("singular Sylvester system (determinant {det:e})")]
    SingularSystem { det: f64 },

    #[error("chain of {requested} stages exceeds the configured maximum of {max}")]
    Resource { requested: u64, max: u64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("inversion did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
