use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite function value at input {input:?} (output {output})")]
    Domain { input: Vec<u32>, output: usize },

    #[error("input domain has {rows} rows, exceeding the cap of {cap}")]
    Size { rows: u128, cap: usize },

    /// The output stream is constant, so there is nothing to separate.
    #[error("output {0} is constant; use a constant decoder instead of a designed constellation")]
    Degenerate(usize),

    #[error("solver did not converge after {iterations} iterations (best margin {best_eps:e})")]
    Convergence { iterations: usize, best_eps: f64, best: Box<nalgebra::DMatrix<f64>> },

    #[error("randomized rounding failed: every candidate violates a separation constraint")]
    Rounding,

    #[error("inconsistent design: {0}")]
    Inconsistent(String),

    #[error("config error{}: {msg}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },

    /// A run violated a physical or numerical precondition (power budget,
    /// zero NMSE normalizer, ...).
    #[error("simulation error: {0}")]
    Simulation(String),

    /// An error raised while evaluating one point of a sweep.
    #[error("{context}: {source}")]
    At { context: String, source: Box<Error> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config { line: None, msg: msg.into() }
    }

    pub(crate) fn config_at(line: usize, msg: impl Into<String>) -> Self {
        Error::Config { line: Some(line), msg: msg.into() }
    }

    pub fn at(self, context: impl Into<String>) -> Self {
        Error::At { context: context.into(), source: Box::new(self) }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::At { source, .. } => source.exit_code(),
            Error::Config { .. } | Error::Parse(_) | Error::Argument(_) | Error::Dimension(_) => 2,
            Error::Convergence { .. } => 3,
            Error::Degenerate(_) | Error::Rounding | Error::Inconsistent(_) => 4,
            Error::Domain { .. } | Error::Size { .. } | Error::Simulation(_) => 2,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
