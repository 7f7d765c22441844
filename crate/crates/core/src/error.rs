use thiserror::Error;

/// Errors raised while building or evaluating systems and operators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("weights are not strictly decreasing at index {index}")]
    NotDecreasing { index: usize },

    #[error("weight at index {index} is not positive")]
    NonPositiveWeight { index: usize },

    #[error("weights sum to {sum}, expected 1")]
    NotNormalized { sum: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("point {point} has non-positive measure")]
    NonPositiveMass { point: usize },

    #[error("map sends point {point} to {image}, outside the space")]
    ImageOutOfRange { point: usize, image: usize },

    #[error("map is not injective: points {first} and {second} share image {image}")]
    NotInjective { first: usize, second: usize, image: usize },

    #[error("measure not preserved at point {point}: mu[t[x]] = {image_mass}, mu[x] = {mass}")]
    MeasureNotPreserved { point: usize, mass: String, image_mass: String },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("alphabet mismatch: {expected} vs {got}")]
    AlphabetMismatch { expected: usize, got: usize },

    #[error("depth {depth} exceeds the depth budget {budget}")]
    DepthBudgetExceeded { depth: usize, budget: usize },

    #[error("depth budget exceeded at iteration {step}: depth {depth} > budget {budget}")]
    IterationBudgetExceeded { step: usize, depth: usize, budget: usize },

    #[error("level count mismatch: operator cap {expected}, function has {got} levels")]
    CapMismatch { expected: usize, got: usize },

    #[error("operation not supported by this backend: {0}")]
    Unsupported(&'static str),

    #[error("set is not invariant: point {point} and its image disagree on membership")]
    NotInvariant { point: usize },

    #[error("set is trivial (measure 0 or 1)")]
    TrivialSet,

    #[error("indicator set is constant; no separating pair exists")]
    NoWitness,

    #[error("invalid state ({x}, {level})")]
    InvalidState { x: usize, level: usize },

    #[error("cannot parse number `{0}`")]
    Parse(String),

    #[error("invalid definition: {0}")]
    Definition(String),

    #[error("invalid observable: {0}")]
    Observable(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NotDecreasing { .. } => "weights_not_decreasing",
            Error::NonPositiveWeight { .. } => "weights_non_positive",
            Error::NotNormalized { .. } => "weights_not_normalized",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::NonPositiveMass { .. } => "measure_non_positive",
            Error::ImageOutOfRange { .. } => "map_out_of_range",
            Error::NotInjective { .. } => "map_not_injective",
            Error::MeasureNotPreserved { .. } => "measure_not_preserved",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::SymbolOutOfRange { .. } => "symbol_out_of_range",
            Error::AlphabetMismatch { .. } => "alphabet_mismatch",
            Error::DepthBudgetExceeded { .. } => "depth_budget_exceeded",
            Error::IterationBudgetExceeded { .. } => "depth_budget_exceeded",
            Error::CapMismatch { .. } => "cap_mismatch",
            Error::Unsupported(_) => "unsupported_backend",
            Error::NotInvariant { .. } => "set_not_invariant",
            Error::TrivialSet => "set_trivial",
            Error::NoWitness => "no_witness",
            Error::InvalidState { .. } => "invalid_state",
            Error::Parse(_) => "parse_error",
            Error::Definition(_) => "invalid_definition",
            Error::Observable(_) => "invalid_observable",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
