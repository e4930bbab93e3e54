use std::fmt;

/// Errors surfaced by the sampling kernels and the engine.
///
/// Support and scale violations are expected during sampling: callers treat
/// them as automatic proposal rejections, not aborts.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An SPD factorization failed while forming a ridge posterior.
    NumericalSingularity,
    /// A GEV evaluation left the support region h(y) > 0.
    SupportViolation,
    /// A GEV shape proposal came closer to zero than the engine allows.
    ShapeTooSmall { xi: f64 },
    /// A rebalance draw was too close to zero to rescale by.
    DegenerateScale { alpha: f64 },
    /// The dataset has no observations.
    NoObservations,
    /// summarize was called on an empty sample store.
    EmptySampleStore,
    /// A specification or configuration value is out of range.
    InvalidSpec(String),
    /// Dataset shape or content does not match the model specification.
    InvalidData(String),
    /// A sample sink failed; carries the underlying context.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NumericalSingularity => write!(f, "SPD factorization failed"),
            Error::SupportViolation => write!(f, "observation outside GEV support"),
            Error::ShapeTooSmall { xi } => write!(f, "GEV shape {xi} below minimum magnitude"),
            Error::DegenerateScale { alpha } => {
                write!(f, "rescale draw {alpha} too close to zero")
            }
            Error::NoObservations => write!(f, "no observations"),
            Error::EmptySampleStore => write!(f, "sample store is empty"),
            Error::InvalidSpec(msg) => write!(f, "invalid model specification: {msg}"),
            Error::InvalidData(msg) => write!(f, "invalid dataset: {msg}"),
            Error::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for Error {}
