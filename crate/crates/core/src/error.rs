use thiserror::Error;

/// Every failure the library reports.
///
/// [`Error::code`] gives a stable kebab-case tag used by the CLI in its
/// one-line diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid rational {0:?} (expected p/q)")]
    InvalidRational(String),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("radicand {radicand} is not squarefree (divisible by {factor}^2)")]
    NotSquarefree { radicand: u64, factor: u64 },
    #[error("radicand must be a positive integer")]
    ZeroRadicand,
    #[error("speed must be positive, got {0}")]
    NonPositiveSpeed(String),
    #[error("circle length must be positive, got {0}")]
    InvalidCircle(String),
    #[error("invalid arc: {0}")]
    InvalidArc(String),
    #[error("runner {runner}: start position {start} outside [0, {length})")]
    StartOutOfRange {
        runner: usize,
        start: String,
        length: String,
    },
    #[error("runners {first} and {second} share the speed {speed}")]
    DuplicateSpeed { first: usize, second: usize, speed: String },
    #[error("speed {0} is irrational; exact evaluation needs a rational speed")]
    IrrationalSpeed(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("shade length {0} must be below the circle length")]
    ShadeTooLong(String),
    #[error("k = {k} runners is below the covering threshold (need at least {required})")]
    BelowThreshold { k: u64, required: u64 },
    #[error("infeasible k \u{2248} exp({inverse_a}): the minimal k has ln k \u{2248} {ln_k_min:.3}, beyond the cap of {cap} runners")]
    InfeasibleScale {
        /// `1/a` in canonical form (`exp(1/a)` runners always suffice).
        inverse_a: String,
        /// Estimate of `ln k` for the minimal runner count.
        ln_k_min: f64,
        cap: u64,
    },
    #[error("harmonic threshold for 1/a = {0} is too close to call at double precision")]
    HarmonicAmbiguous(String),
    #[error("lifted interval count {count} exceeds the budget of {budget}")]
    IntervalBudget { count: u128, budget: u128 },
    #[error("precision exhausted at {bits} bits")]
    PrecisionExhausted { bits: u64 },
    #[error("kronecker search needs the unit circle")]
    NotUnitCircle,
    #[error("invalid trajectory for agent {agent}: {reason}")]
    InvalidTrajectory { agent: usize, reason: String },
    #[error("schema error: {0}")]
    Schema(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidRational(_) | Error::ZeroDenominator => "parse",
            Error::NotSquarefree { .. } | Error::ZeroRadicand => "not-squarefree",
            Error::NonPositiveSpeed(_) => "non-positive-speed",
            Error::InvalidCircle(_) => "invalid-circle",
            Error::InvalidArc(_) => "invalid-arc",
            Error::StartOutOfRange { .. } => "start-out-of-range",
            Error::DuplicateSpeed { .. } => "duplicate-speed",
            Error::IrrationalSpeed(_) => "irrational-speed",
            Error::OutOfRange(_) => "out-of-range",
            Error::ShadeTooLong(_) => "shade-too-long",
            Error::BelowThreshold { .. } => "below-threshold",
            Error::InfeasibleScale { .. } => "infeasible-scale",
            Error::HarmonicAmbiguous(_) => "harmonic-ambiguous",
            Error::IntervalBudget { .. } => "interval-budget",
            Error::PrecisionExhausted { .. } => "precision-exhausted",
            Error::NotUnitCircle => "not-unit-circle",
            Error::InvalidTrajectory { .. } => "invalid-trajectory",
            Error::Schema(_) => "parse",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
