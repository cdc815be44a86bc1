use thiserror::Error;

/// Every failure mode of the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {value} outside [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("capacity error: {requested} bytes requested, budget is {budget} bytes")]
    Capacity { requested: u64, budget: u64 },

    #[error("pole error: argument within {distance:e} of pole {pole}")]
    Pole { pole: String, distance: f64 },

    #[error("denominator zero: argument within {distance:e} of zero {zero}")]
    DenominatorZero { zero: String, distance: f64 },

    #[error("precision error: {0}")]
    Precision(String),

    #[error("enclosure error: {0}")]
    Enclosure(String),

    #[error("numeric certificate failed: {0}")]
    NumericCertificate(String),

    #[error("tolerance failure: {0}")]
    ToleranceFailure(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("cache file has bad magic or is truncated: {0}")]
    CorruptCache(String),

    #[error("cache version mismatch: file has {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn range(value: f64, lo: f64, hi: f64) -> Self {
        Error::Range { value, lo, hi }
    }

    /// True for errors that mean a numeric certificate could not be met
    /// (as opposed to bad input).
    pub fn is_certificate_failure(&self) -> bool {
        matches!(
            self,
            Error::NumericCertificate(_) | Error::ToleranceFailure(_) | Error::NonConvergence(_) | Error::Precision(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
