use thiserror::Error;

/// Failures raised inside a time-stepping solve.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("Newton iteration did not converge at time index {time_index} after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged {
        time_index: usize,
        iterations: usize,
        residual: f64,
    },
    #[error(
        "linear solver stalled after {iterations} iterations (relative residual {residual:e})"
    )]
    LinearSolver { iterations: usize, residual: f64 },
    #[error("non-finite value produced at time index {time_index}")]
    NonFinite { time_index: usize },
}

impl SolverError {
    /// Attach the time index of the failing step.
    pub(crate) fn at_time(self, index: usize) -> Self {
        match self {
            SolverError::NewtonDiverged {
                iterations,
                residual,
                ..
            } => SolverError::NewtonDiverged {
                time_index: index,
                iterations,
                residual,
            },
            SolverError::NonFinite { .. } => SolverError::NonFinite { time_index: index },
            other => other,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("infeasible control budget: Γ/M = {ratio} must lie in (0, |Ω|·T = {bound}]")]
    Infeasible { ratio: f64, bound: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("optimizer iteration {iteration}: {source}")]
    Optimizer {
        iteration: usize,
        #[source]
        source: SolverError,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
