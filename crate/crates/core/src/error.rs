use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Ewens parameter theta = {0}; must be finite and > 0")]
    InvalidTheta(f64),
    #[error("invalid cycle type: {0}")]
    InvalidCycleType(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("size limit exceeded: {what} = {value} > {limit}")]
    SizeLimit {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("horizon {horizon} too small for m_max = {m_max}; need at least {}", 2 * m_max)]
    HorizonTooSmall { horizon: usize, m_max: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid multiplier model: {0}")]
    InvalidModel(String),
    #[error("invalid Fourier coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("logarithm of zero")]
    ZeroArgument,
    #[error("singular sample: a factor vanished exactly (cycle length {cycle_length})")]
    SingularSample { cycle_length: usize },
    #[error("dimension {0} not supported")]
    DimensionUnsupported(usize),
    #[error("resonant frequency q = {q:?}: |q . phi| is (numerically) an integer")]
    ResonantFrequency { q: Vec<i64> },
    #[error("sequence point {index} hits a singular angle of the integrand")]
    SingularPointHit { index: usize },
    #[error("sequence point {index} lies outside the box [{delta}, 1 - {delta}]")]
    PointOutsideBox { index: usize, delta: f64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("regime violation: {0}")]
    RegimeViolation(String),
    #[error("too many singular samples: {rejected} rejected out of {requested}")]
    TooManySingular { rejected: usize, requested: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
