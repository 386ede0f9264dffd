//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the pseudo-label pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,

    /// Fewer than two distinct points: no orientation can be estimated.
    #[error("degenerate mask")]
    DegenerateMask,

    #[error("no seeds")]
    NoSeeds,

    #[error("seed outside grid: ({x}, {y}) not in {width}x{height}")]
    SeedOutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("no ground-truth points")]
    NoGroundTruth,

    #[error("ground-truth point outside image bounds: ({x}, {y})")]
    GtOutOfBounds { x: f64, y: f64 },

    #[error("class id out of range: {0}")]
    ClassIdOutOfRange(u32),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("non-finite score at cell ({x}, {y}) channel {channel}")]
    NonFiniteScore { x: usize, y: usize, channel: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("infeasible packing for class {class_id} after {attempts} attempts")]
    InfeasiblePacking { class_id: u32, attempts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Single-word category used by the CLI for machine-parseable failures.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Json(_)
            | Error::Format(_)
            | Error::DimensionMismatch { .. }
            | Error::ClassIdOutOfRange(_)
            | Error::NonFiniteScore { .. } => "format",
            Error::InvalidConfig(_)
            | Error::NoSeeds
            | Error::NoGroundTruth
            | Error::GtOutOfBounds { .. }
            | Error::SeedOutOfBounds { .. } => "config",
            Error::InfeasiblePacking { .. } => "infeasible",
            Error::EmptyPointSet | Error::DegenerateMask => "degenerate",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
