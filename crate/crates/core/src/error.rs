use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polynomial degree {0} (must be >= 1)")]
    InvalidDegree(usize),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("angular partition with {0} elements is incompatible with axis-aligned faces (must be a positive multiple of 4)")]
    AngularPartition(usize),

    #[error("angular polynomial degree {0} is not supported (only 0)")]
    AngularDegree(usize),

    #[error("asymmetry parameter {0} is outside [0, 1)")]
    Asymmetry(f64),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular local matrix on element {element}")]
    SingularLocal { element: usize },

    #[error("internal linear algebra failure: {0}")]
    Internal(String),

    #[error("GMRES did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("missing local operators for element {0}")]
    MissingOperators(usize),

    #[error("reference field has zero norm")]
    ZeroReference,

    #[error("point ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("unknown case tag `{0}`")]
    UnknownCase(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model does not match discretization: {0}")]
    ModelMismatch(String),

    #[error("dataset does not match discretization: {0}")]
    DatasetMismatch(String),

    #[error("unsupported file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("malformed raster {path}: {detail}")]
    Raster { path: PathBuf, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
