use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} must lie strictly inside (1e-12, 1 - 1e-12)")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("compact condition Gamma(0) < Gamma(1) violated: Gamma(0) = {gamma0}, Gamma(1) = {gamma1}")]
    CompactCondition { gamma0: f64, gamma1: f64 },

    #[error("{name} = {value} is invalid: {reason}")]
    InvalidSize {
        name: &'static str,
        value: usize,
        reason: &'static str,
    },

    #[error("attribute vectors have lengths {left} and {right}, expected {expected}")]
    LengthMismatch {
        left: usize,
        right: usize,
        expected: usize,
    },

    #[error("{name} = {value} is outside [0, {max}]")]
    OutOfRange {
        name: &'static str,
        value: usize,
        max: usize,
    },

    #[error("{name} = {value} must lie in {interval}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        interval: &'static str,
    },

    #[error("no root below mu1: requires 1 + rho ln(1 - mu1) < 0, got {value}")]
    NoRootBelowMean { value: f64 },

    #[error("inconsistent moments: E[Z^2] = {second} < E[Z]^2 = {first_sq}")]
    InconsistentMoments { second: f64, first_sq: f64 },

    #[error("level {level} = round(nu * L) is outside [1, L - 1] for L = {levels}")]
    DegenerateLevel { level: usize, levels: usize },

    #[error("instance too large to enumerate: n = {n}, L = {levels} (limits n <= 5, L <= 3)")]
    EnumerationCap { n: usize, levels: usize },

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
}
