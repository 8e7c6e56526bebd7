use thiserror::Error;

use crate::spaces::PointKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix {0:?} is not unimodular (|det| must be 1)")]
    NotUnimodular([[i64; 2]; 2]),

    #[error("matrix {0:?} is not hyperbolic (|trace| must exceed 2)")]
    NonHyperbolic([[i64; 2]; 2]),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("point kind mismatch: system expects {expected:?}, got {found:?}")]
    KindMismatch { expected: PointKind, found: PointKind },

    #[error("ideal point index must be >= 1, got {0}")]
    InvalidIdealIndex(u64),

    #[error("window exhausted: operation needs coordinate {needed}, window covers [{lo}, {hi}]")]
    WindowExhausted { needed: i64, lo: i64, hi: i64 },

    #[error("unknown system id {0:?}")]
    UnknownSystem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty sample cloud")]
    EmptySample,

    #[error("seam {seam} violates the jump bound: {jump} >= {delta}")]
    SeamViolation { seam: usize, jump: f64, delta: f64 },

    #[error("exact separated-set search supports at most {max} points, got {size}")]
    ExactTooLarge { size: usize, max: usize },

    #[error("shadow error {shadow_eps} too large to distinguish words (limit {limit})")]
    IndistinguishableWords { shadow_eps: f64, limit: f64 },

    #[error("word readout failed for word {word} at block {block}")]
    ReadoutFailed { word: String, block: usize },

    #[error("shadowing is not available for system {0}")]
    ShadowUnavailable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
