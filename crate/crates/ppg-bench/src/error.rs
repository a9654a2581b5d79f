//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the bench toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// A signal has no usable content (constant, empty after degradation, ...).
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// An input value or structure is invalid.
    #[error("invalid input: {0}")]
    Input(String),

    /// A file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A binary container is malformed.
    #[error("format error: {0}")]
    Format(String),

    /// A frame target falls outside the dither guard band.
    #[error("range error: {0}")]
    Range(String),

    /// A channel profile cannot carry the requested signal.
    #[error("profile error: {0}")]
    Profile(String),

    /// Not enough data to produce a meaningful result.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// No spectral content inside the configured band.
    #[error("band error: {0}")]
    Band(String),

    /// Every case in a run failed.
    #[error("run error: {0}")]
    Run(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
