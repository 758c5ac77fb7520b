use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("degenerate terminal coupling (denominator {denominator:e})")]
    DegenerateCoupling { denominator: f64 },

    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("monte carlo needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("sweep did not converge after {iterations} iterations (last change {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}
