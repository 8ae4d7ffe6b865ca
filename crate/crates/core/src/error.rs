//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("point cloud has {got} points but the operation needs at least {need}")]
    TooFewPoints { got: usize, need: usize },

    #[error("degenerate neighborhood around point {point}: neighbors are collinear")]
    DegenerateNeighborhood { point: usize },

    #[error("degenerate patch Jacobian: tangent directions are parallel")]
    DegenerateJacobian,

    #[error("ambiguous gradient: aligned normals cancel at ({x}, {y}, {z})")]
    AmbiguousGradient { x: f64, y: f64, z: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt grid file {path}: {msg}")]
    CorruptGrid { path: String, msg: String },

    #[error("mesh has no surface area to sample")]
    ZeroAreaMesh,

    #[error("no lattice vertex falls inside the evaluation band")]
    EmptyEvaluationBand,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
