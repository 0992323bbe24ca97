use thiserror::Error;

/// Errors raised by the spectral, geometric and ledger layers.
///
/// The variants mirror the failure classes a caller has to tell apart:
/// a bad configuration is the user's fault, a geometry error means the
/// grid is too coarse for the requested band, and so on.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("norm domain error: {0}")]
    NormDomain(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("arithmetic error: {0}")]
    Arithmetic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
