//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the numeric layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A quadrature grid is too coarse for the requested operation.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// Two sampled fields do not live on the same polar grid.
    #[error("fields live on different polar grids")]
    GridMismatch,

    /// A numerical procedure failed its convergence check.
    #[error("not converged: {0}")]
    NotConverged(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A fringe curve is identically zero, so its visibility is undefined.
    #[error("fringe curve is identically zero; visibility undefined")]
    DegenerateCurve,

    /// A plain-text configuration block failed to parse.
    #[error("config parse error: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
