//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site set must be nonempty")]
    EmptySites,
    #[error("duplicate site {0} in site set")]
    DuplicateSite(i64),
    #[error("up-probability must lie strictly inside (0,1), got {0}")]
    InvalidProbability(f64),
    #[error("intensity must be positive and finite, got {0}")]
    InvalidIntensity(f64),
    #[error("polynomial coefficients must be finite")]
    NonFiniteCoefficient,
    #[error("polynomial degree {got} exceeds the supported cap {cap}")]
    DegreeTooLarge { got: usize, cap: usize },
    #[error("constant observable has no chaos coefficients")]
    ConstantObservable,
    #[error("all chaos coefficients vanish; rank undefined")]
    RankUndefined,
    #[error("correlations of order {order} are non-summable under symmetric sampling")]
    NonSummable { order: u32 },
    #[error("drifted sampling law required")]
    DriftRequired,
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("truncation budget exceeded: would need about {needed} terms (cap {cap})")]
    TailBudget { needed: u64, cap: u64 },
    #[error("samples must be nonempty, finite, and of sufficient length")]
    InvalidSamples,
    #[error("need at least {need} points, got {got}")]
    NotEnoughPoints { need: usize, got: usize },
    #[error("quantile argument must lie strictly inside (0,1), got {0}")]
    InvalidQuantile(f64),
    #[error("rate fit requires strictly positive distances and horizons")]
    NonPositiveDistance,
    #[error("log-log plot requires strictly positive coordinates")]
    NonPositiveLogValue,
    #[error("degenerate plot range")]
    DegeneratePlotRange,
    #[error("config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
