use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("layer {layer}: expected {expected} inputs, got {actual}")]
    LayerDimension {
        layer: usize,
        expected: usize,
        actual: usize,
    },

    #[error("parameter vector has length {actual}, architecture needs {expected}")]
    ParameterLength { expected: usize, actual: usize },

    #[error("dataset shape mismatch: {0}")]
    DatasetShape(String),

    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error("search direction is not a descent direction (slope {slope})")]
    NotDescentDirection { slope: f64 },

    #[error("line search failed after {steps} steps")]
    LineSearchFailed { steps: usize },

    #[error("non-finite objective at the starting point")]
    NonFiniteStart,

    #[error("unknown size class `{0}`")]
    UnknownSizeClass(String),

    #[error("unknown variant `{0}`")]
    UnknownVariant(String),

    #[error("unsupported format version {found} (this build reads version {supported})")]
    Version { found: u32, supported: u32 },

    #[error("corrupt results file: {0}")]
    Corrupt(String),

    #[error("all {0} seeds of the cell failed")]
    CellFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
