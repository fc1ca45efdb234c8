use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid of {grid} points undersamples radius {radius} (needs at least {needed})")]
    Undersampled {
        grid: usize,
        radius: usize,
        needed: usize,
    },
    #[error("radius mismatch: {0} vs {1}")]
    RadiusMismatch(usize, usize),
    #[error("{what} does not accept arity {got}")]
    Arity { what: String, got: usize },
    #[error("usage: {0}")]
    Usage(String),
    #[error("tuple entries overflow for n = {0}")]
    Overflow(u64),
    #[error("k_max = {kmax} is outside the certified range k_max > 16 max(1, |gamma|) = {limit}")]
    OutOfCertifiedRange { kmax: i64, limit: f64 },
    #[error("exact evaluation needs rational coefficients ({0})")]
    NotExact(&'static str),
    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
