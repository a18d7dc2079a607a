use thiserror::Error;

/// Errors raised by geometry construction, combinatorics and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("multi-index dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("multi-index {lower:?} is not componentwise <= {upper:?}")]
    NotBelow { lower: Vec<u32>, upper: Vec<u32> },
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("NonConvex: {0}")]
    NonConvex(String),
    #[error("Degenerate: {0}")]
    Degenerate(String),
    #[error("DuplicateVertex: vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("InvalidPolytope: {0}")]
    InvalidPolytope(String),
    #[error("AllCollinear: input points span no area")]
    AllCollinear,
    #[error("Unsupported: {0}")]
    Unsupported(String),

    #[error("point {0:?} lies outside the polytope")]
    OutsideDomain(Vec<f64>),
    #[error("mesh: {0}")]
    InvalidMesh(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that describe invalid input geometry.
    pub fn is_geometry(&self) -> bool {
        matches!(
            self,
            Error::NonConvex(_)
                | Error::Degenerate(_)
                | Error::DuplicateVertex(..)
                | Error::InvalidPolytope(_)
                | Error::AllCollinear
                | Error::InvalidMesh(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
