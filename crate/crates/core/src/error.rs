use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for axis {axis} of size {size}")]
    IndexOutOfRange { axis: usize, index: usize, size: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("size cap exceeded: {what} would need {needed} entries, cap is {cap}")]
    SizeCap { what: &'static str, needed: u128, cap: u128 },

    #[error("retry budget of {budget} draws exhausted (sample range {sample_max} too small?)")]
    RetryBudgetExhausted { budget: usize, sample_max: u64 },

    #[error("probability vector invalid: {0}")]
    Distribution(String),

    #[error("axis set invalid: {0}")]
    Axes(String),

    #[error("marginals are infeasible on the given support")]
    InfeasibleMarginals,

    #[error("certificate rejected: {0}")]
    Certificate(String),

    #[error("iterative scaling did not converge: deviation {deviation:e} after {sweeps} sweeps")]
    NotConverged { sweeps: usize, deviation: f64 },

    #[error("malformed rational {0:?}")]
    Rational(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
