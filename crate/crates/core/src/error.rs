use thiserror::Error;

use crate::bilp::BilpError;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("no mounting surfaces: scenario has no buildings")]
    NoMountingSurfaces,
    #[error("facet size {facet} m exceeds every face dimension")]
    FacetTooLarge { facet: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("nothing to place: {0}")]
    NothingToPlace(String),
    #[error("post-solve verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Solver(#[from] BilpError),
}

impl PlanError {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        PlanError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = PlanError> = std::result::Result<T, E>;
