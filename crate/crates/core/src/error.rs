use thiserror::Error;

/// Errors produced by model construction, statistics and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("degenerate denominator in {0}")]
    DegenerateDenominator(&'static str),

    /// The projected variance `tau_k` vanished, so the normalized Lindeberg
    /// functional is undefined at this `k`. Reported as a condition rather
    /// than a panic; callers decide how to proceed.
    #[error("tau_k = 0: Lindeberg functional undefined for this direction")]
    DegenerateDirection,

    #[error("path would exceed the size budget: {0}")]
    SizeBudget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
