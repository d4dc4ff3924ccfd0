use thiserror::Error;

/// Unified error type for construction, calculation, and experiment failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability mass function has empty support")]
    EmptySupport,

    #[error("probability at index {index} is {value}, outside [0, 1]")]
    ProbabilityOutOfRange { index: u128, value: f64 },

    #[error("probabilities sum to {sum:?}, expected 1 within {tolerance:e}")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("support size {size} exceeds the dense materialization cap {cap}")]
    SupportTooLarge { size: u128, cap: u128 },

    #[error("{operation} requires a materialized table; this pmf is implicit")]
    ImplicitPmf { operation: &'static str },

    #[error("sample contains symbol {symbol}, outside the declared support {support}")]
    SymbolOutOfSupport { symbol: u128, support: u128 },

    #[error("empty sample")]
    EmptySample,

    #[error("label {label} is not binary")]
    NonBinaryLabel { label: u64 },

    #[error("parameter {name} = {value} outside {expected}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("entropy target {gamma} is below the feasibility floor H({eps}) = {floor}")]
    EntropyBelowFeasibility { gamma: f64, eps: f64, floor: f64 },

    #[error("tail not heavy: alpha = {alpha:e} exceeds eps/2 = {half_eps:e} after rounding")]
    TailNotHeavy { alpha: f64, half_eps: f64 },

    #[error("tail size 2^{log2_m:.3} exceeds the representable index range")]
    TailTooLarge { log2_m: f64 },

    #[error(
        "projection of a default-1 hypothesis onto a partial implicit high-probability \
         set of {count} symbols is not representable in rule form"
    )]
    ProjectionNotRepresentable { count: u128 },

    #[error("union-mass closed form requires z <= 1/(2L-1); got z = {z}, L = {l}")]
    UnionMassOutOfValidity { z: f64, l: u64 },

    #[error("minimum support probability {p_min:e} is below eta = {eta:e}")]
    MinProbBelowEta { p_min: f64, eta: f64 },

    #[error("repeated input {symbol} with conflicting labels")]
    ConflictingLabels { symbol: u128 },

    #[error("enumeration size {k}^{n} exceeds the cap of {cap} encoders")]
    EnumerationTooLarge { k: usize, n: usize, cap: u64 },

    #[error("criterion {criterion} is not supported by {operation}")]
    UnsupportedCriterion {
        criterion: &'static str,
        operation: &'static str,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("verified property failed: {0}")]
    PropertyViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
