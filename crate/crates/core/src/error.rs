use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("k = {k} lies outside the admissible window {window} for n = {n}")]
    Window { n: usize, k: f64, window: String },

    #[error("degenerate exponent: {0}")]
    Degenerate(String),

    #[error("invalid metric parameters: {0}")]
    InvalidMetric(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("CFL violated: dt = {dt} exceeds bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("blow-up detected near t = {time} (last safe time {last_safe_time})")]
    Blowup { time: f64, last_safe_time: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (last difference {last_difference})")]
    NoConvergence {
        iterations: usize,
        last_difference: f64,
    },

    #[error("infeasible budget: {0}")]
    Infeasible(String),

    #[error("null constraint drift {drift} exceeds tolerance at sigma = {sigma}")]
    ConstraintDrift { drift: f64, sigma: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
