use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The input lies outside the domain of the function (poles, unmet
    /// preconditions, divergent series).
    #[error("domain error: {0}")]
    Domain(String),

    /// Model parameters violate an invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Two slopes coincide or a slope vanishes.
    #[error("degenerate slopes: {0}")]
    DegenerateSlope(String),

    /// An iterative method ran out of budget; the partial result is kept.
    #[error("{context} did not converge after {iterations} iterations (partial value {partial}, error estimate {abs_err:e})")]
    NonConvergence {
        context: &'static str,
        partial: Complex64,
        abs_err: f64,
        iterations: usize,
    },

    /// Time integration failed (step budget, step underflow, norm drift).
    #[error("integration failure: {0}")]
    Integration(String),
}
