use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("metric is not positive at node {node} (s = {s}): eigenvalue {value}")]
    NonPositiveMetric { node: usize, s: f64, value: f64 },
    #[error("resolution too low: {0}")]
    ResolutionTooLow(String),
    #[error("profile spectral tail {tail:e} exceeds {threshold:e}")]
    TailTooLarge { tail: f64, threshold: f64 },
    #[error("projection to degree {degree} leaves tail {tail:e}")]
    ProjectionTail { degree: usize, tail: f64 },
    #[error("Bergman coefficient a_{0} is not supported")]
    UnsupportedCoefficient(usize),
    #[error("field is attached to a different metric")]
    MismatchedMetric,
    #[error("potential degree {degree} exceeds the maximum {max}")]
    DegreeTooHigh { degree: usize, max: usize },
    #[error("dimension n = {0} is outside 1..=3")]
    InvalidDimension(usize),
    #[error("dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("dim H0 overflows for n = {n}, k = {k}")]
    Overflow { n: usize, k: usize },
    #[error("section norm is not positive for degree {degree}")]
    NonPositiveNorm { degree: usize },
    #[error("Gram matrix is not positive definite")]
    SingularGram,
    #[error("path leaves the Kahler cone at t = {t}")]
    PathLeavesCone { t: f64 },
    #[error("degree {0} is out of range")]
    DegreeOutOfRange(usize),
    #[error("field spec {0:?} is not supported")]
    UnsupportedField(String),
    #[error("iteration did not converge after {iterations} steps (last defect {last_defect:e})")]
    NotConverged {
        iterations: usize,
        last_defect: f64,
        defects: Vec<f64>,
    },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
