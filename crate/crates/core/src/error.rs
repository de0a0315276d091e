use thiserror::Error;

/// Errors produced anywhere in the kernel-learning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    Index { index: usize, n_qubits: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("kernel kind error: {0}")]
    Kind(String),
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),
    #[error("invalid kernel weights: {0}")]
    Weight(String),
    #[error("label error: {0}")]
    Label(String),
    #[error("degenerate solution: {0}")]
    Degenerate(String),
    #[error("cannot place {clusters} cluster centroids on a {dim}-dimensional hypercube")]
    Placement { clusters: usize, dim: usize },
    #[error("feature column {0} is constant")]
    DegenerateFeature(usize),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("aggregation error: {0}")]
    Aggregation(String),
    #[error("statevector norm drifted to {0}")]
    NormDrift(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}
