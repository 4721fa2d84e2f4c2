use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation at or beyond the speed singularity `s = t0`.
    #[error("state {s} s is outside the reward domain (must be < t0 = {t0} s)")]
    Domain { s: f64, t0: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid arrival model: {0}")]
    InvalidArrivalModel(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("rate estimator has no observations")]
    EmptyEstimator,

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("{solver} did not converge after {iterations} iterations (last change {last_delta:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        last_delta: f64,
    },

    #[error("poisson solve diverged at theta = {theta}, c = {c}: {reason}")]
    Diverged { theta: f64, c: f64, reason: String },

    #[error("vehicle {vehicle}: policy failed: {source}")]
    Policy {
        vehicle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid flow schedule: {0}")]
    Schedule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotConverged { .. } | Error::Diverged { .. } | Error::Bracketing(_) => true,
            Error::Policy { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
