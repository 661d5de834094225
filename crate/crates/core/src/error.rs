use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("{what}[{index}] = {value} must be positive")]
    NonPositiveValue {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("crosstalk coefficient g = {0} outside the supported range")]
    CrosstalkOutOfRange(f64),
    #[error("crosstalk coefficient g = {0} must be exactly 1")]
    CrosstalkNotOne(f64),
    #[error("budget {0} must be positive")]
    InvalidBudget(f64),
    #[error("bisection did not reach |H - budget| <= {tol} (residual {residual})")]
    ToleranceNotReached { tol: f64, residual: f64 },
    #[error("multipliers must be positive and nondecreasing")]
    UnsortedMultipliers,
    #[error("thresholds must be nonincreasing")]
    UnsortedThresholds,
    #[error("threshold vector yields a nonpositive reciprocal multiplier at position {0}")]
    NonPositiveReciprocal(usize),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("negative power {value} for user {user} on channel {channel}")]
    NegativePower {
        user: usize,
        channel: usize,
        value: f64,
    },
    #[error("expected {expected} users, got {got}")]
    WrongUserCount { expected: usize, got: usize },
    #[error("budgets must be strictly decreasing in canonical order")]
    NonStrictBudgets,
    #[error("infeasible profile: {0}")]
    InfeasibleProfile(String),
    #[error("cannot split the aggregate allocation: {0}")]
    InfeasibleSplit(String),
}
