use thiserror::Error;

/// Errors produced anywhere in the compression / least-squares pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "singular triangular system: |r[{index}][{index}]| = {value:e} is below {threshold:e}"
    )]
    Singular {
        index: usize,
        value: f64,
        threshold: f64,
    },

    #[error("point {point} lies outside the bounding box along axis {axis} (value {value})")]
    OutOfDomain {
        point: usize,
        axis: usize,
        value: f64,
    },

    /// The iteration cap was hit. `best` holds the last iterate so callers can still inspect it.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    /// Phase one of the simplex method ended with a positive artificial objective.
    #[error("linear program infeasible: phase-one objective {phase_one_objective:e} exceeds tolerance {tolerance:e}")]
    Infeasible {
        phase_one_objective: f64,
        tolerance: f64,
    },

    #[error("linear program unbounded along column {column}")]
    Unbounded { column: usize },

    #[error("stability condition violated: epsilon * sqrt(M) = {0} >= 1")]
    StabilityViolated(f64),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
