use thiserror::Error;

use crate::spectral::FieldKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("expected a {expected:?} field, got {found:?}")]
    KindMismatch {
        expected: FieldKind,
        found: FieldKind,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The filter deviation bound is degenerate for alpha = 0 (both sides vanish).
    #[error("filter deviation bound needs alpha > 0")]
    DegenerateFilter,

    #[error("non-finite state at t = {time} (step {step}); last valid time {last_valid_time}")]
    BlowUp {
        time: f64,
        step: usize,
        last_valid_time: f64,
    },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
