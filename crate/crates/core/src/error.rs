//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {name} out of range: {value}")]
    ParamOutOfRange { name: &'static str, value: f64 },

    /// The semiconjugacy image of a point is not close to any `k/(2^p - 1)`.
    /// Usually signals a wrong period or a near-neutral cycle.
    #[error("semiconjugacy residual {residual:e} too large for period {period}")]
    ResidualTooLarge { residual: f64, period: usize },

    #[error("no convergence: {0}")]
    NoConvergence(&'static str),

    #[error("refined orbit has exact period {found}, not a clean divisor of {requested}")]
    WrongPeriod { requested: usize, found: usize },

    /// The exponential factor of `g_{a,b}` left floating-point range. Callers
    /// iterating orbits must clamp through the escape threshold first.
    #[error("overflow in exponential factor: b Re(z - 1/z) = {0:e}")]
    Overflow(f64),

    #[error("b = 0 has no critical points in C^*")]
    DegenerateB,

    #[error("critical data inconsistent: {0}")]
    InconsistentData(&'static str),

    #[error("multiplier {0} outside (0, 1); Koenigs chart undefined")]
    UnsupportedMultiplier(f64),

    #[error("orbit left the linearization disk")]
    DomainEscape,

    #[error("dilatation coefficient undefined at the chart base point")]
    AtBasePoint,

    #[error("critical point on the pullback orbit")]
    CriticalOnOrbit,

    #[error("{name} = {value} outside (0, 1)")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("bisection bracket invalid for level {level}")]
    BisectionFailure { level: i64 },

    #[error("no cross-section interval continues the path at b = {b}")]
    PathBroken { b: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),

    #[error("start parameter is not in the tongue of the requested type")]
    TypeMismatch,

    #[error("invalid binary type: {0}")]
    InvalidType(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
