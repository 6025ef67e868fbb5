use thiserror::Error;

/// Errors raised by models, controllers, integrators and the scenario runner.
#[derive(Debug, Error)]
pub enum ControlError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {context}")]
    NumericalDomain { context: String },

    #[error("state penalty {value:e} is negative at x = {state:?}; gamma is inadmissible here")]
    GammaViolation { state: Vec<f64>, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration blew up at t = {time}")]
    Blowup { time: f64 },

    #[error("feedforward is ill-posed: input matrix has rank {rank} < {columns} columns")]
    IllPosedFeedforward { rank: usize, columns: usize },

    #[error("state is degenerate (|P^T x| = {norm:e} within deadzone)")]
    Degenerate { norm: f64 },

    #[error("unknown example `{0}`")]
    UnknownExample(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = ControlError> = std::result::Result<T, E>;

impl ControlError {
    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        ControlError::NumericalDomain {
            context: context.into(),
        }
    }
}
