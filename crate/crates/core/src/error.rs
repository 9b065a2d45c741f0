use thiserror::Error;

/// Errors raised by the q-series machinery and the model built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QoscError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("series did not converge within {terms} terms (last term magnitude {last_term:e})")]
    NonConvergent { terms: usize, last_term: f64 },

    #[error("lower parameter #{index} hits a pole (factor 1 - b q^{power} vanishes)")]
    PoleInDenominator { index: usize, power: usize },

    #[error("argument must be nonzero")]
    ZeroArgument,

    #[error(
        "lattice truncation K = {k_max} is too coarse: last term {last_term:e} exceeds tolerance"
    )]
    TruncationTooCoarse { k_max: usize, last_term: f64 },

    #[error("grid functions live on different lattices")]
    LatticeMismatch,

    #[error("outside convergence region: {0}")]
    OutsideConvergenceRegion(String),

    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
}

pub type Result<T> = std::result::Result<T, QoscError>;
