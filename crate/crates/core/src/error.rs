//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by tensor IO, projection, filtering, losses, the network,
/// and the synthetic data generator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid tensor shape {dims:?}: {reason}")]
    InvalidShape { dims: Vec<usize>, reason: String },

    #[error("tensor file format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("class id {id} has no palette entry")]
    PaletteMissing { id: u16 },

    #[error("point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("no supervision: every pixel carries the ignore sentinel")]
    NoSupervision,

    #[error("vertex {vertex} out of range for a {height}x{width} grid")]
    VertexOutOfRange {
        vertex: u32,
        height: usize,
        width: usize,
    },

    #[error("training diverged at epoch {epoch}, step {step}: non-finite loss")]
    Diverged { epoch: usize, step: usize },

    #[error("degenerate scene: no lidar returns")]
    DegenerateScene,

    #[error("scene placement infeasible after {retries} retries")]
    PlacementInfeasible { retries: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
