use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration (grid sizes, step counts, missing keys, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A sampled value was not finite.
    #[error("evaluation error at r = {node}: {message}")]
    Evaluation { node: f64, message: String },

    /// A non-finite entry appeared while assembling a discrete form.
    #[error("assembly error in cell {cell} ([{left}, {right}]): {message}")]
    Assembly {
        cell: usize,
        left: f64,
        right: f64,
        message: String,
    },

    /// An iterative or direct solver failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A lattice search found no admissible candidate.
    #[error("not found: {0}")]
    NotFound(String),

    /// A refinement study could not be classified.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(format!("serialization: {e}"))
    }
}
