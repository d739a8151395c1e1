//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Cholesky pivot fell below the relative floor; the matrix is treated as
    /// singular. For sketched Gram matrices this is the "estimate undefined"
    /// event, not a crash.
    #[error("matrix not positive definite: pivot {pivot:.3e} at column {col} (floor {floor:.3e})")]
    NotPositiveDefinite { col: usize, pivot: f64, floor: f64 },

    #[error("rank deficient: |R[{col},{col}]| = {pivot:.3e} underflows {floor:.3e}")]
    RankDeficient { col: usize, pivot: f64, floor: f64 },

    #[error("vector length {len} is not a power of two")]
    LengthNotPowerOfTwo { len: usize },

    #[error("sketch size m={m} exceeds row count n={n}")]
    SketchTooLarge { m: usize, n: usize },

    #[error("sketch size m={m} must exceed column count d={d}")]
    SketchSmallerThanD { m: usize, d: usize },

    #[error("sampled row {index} has zero probability")]
    ZeroProbabilityRow { index: usize },

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("all {total} replicas failed (non-invertible or clipped)")]
    AllReplicasFailed { total: usize },

    #[error("conditioning event too rare: acceptance rate {rate:.3e} below 1e-3")]
    ConditioningTooRare { rate: f64 },

    #[error("entry law has dependent coordinates; use the Monte Carlo variance path")]
    LawNotIndependent,

    #[error("invalid shape: {0}")]
    ShapeInvalid(String),

    #[error("exact Newton baseline failed to converge")]
    BaselineDiverged,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
