use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate simplex on vertices {0:?}")]
    DegenerateSimplex(Vec<usize>),
    #[error("empty complex")]
    EmptyComplex,
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("shape is not star-shaped about its center (vertex {vertex} not visible)")]
    NotStarShaped { vertex: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("adjacent nerve vertices {0} and {1} share level {2}")]
    EqualLevelAdjacent(u32, u32, i64),
    #[error("cone vertex {0} already present in the complex")]
    ConeVertexPresent(u32),
    #[error("nerve point support is not contained in the given simplex")]
    SupportOutsideSimplex,
    #[error("cover element radius underflow (reached {0:e})")]
    RadiusUnderflow(f64),
    #[error("subdivision budget exceeded: required mesh {required:e}, reached {reached:e}")]
    SubdivisionBudget { required: f64, reached: f64 },
    #[error("{stage} audit failed: {detail}")]
    AuditFailure { stage: String, detail: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn audit(stage: &str, detail: impl Into<String>) -> Self {
        Error::AuditFailure {
            stage: stage.to_string(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
