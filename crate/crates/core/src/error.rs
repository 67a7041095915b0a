use thiserror::Error;

use crate::ComplexValue;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Input lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity exceeded the representable exponent threshold.
    #[error("overflow: {0}")]
    Overflow(String),

    /// The transfer-operator series diverges for this parameter.
    #[error("transfer series diverges for t = {t} (requires t > 1)")]
    Divergence { t: f64 },

    /// Adaptive quadrature stopped before reaching the tolerance.
    #[error("quadrature did not converge: err_est {err_est:e} > tol {tol:e}")]
    NonConvergence {
        best: ComplexValue,
        err_est: f64,
        tol: f64,
    },

    /// Evaluation point too close to the integration contour.
    #[error("point at distance {distance:e} from the contour (minimum {minimum:e})")]
    Conditioning { distance: f64, minimum: f64 },

    /// Root bracketing failed.
    #[error("bracketing failed: {0}")]
    Bracket(String),

    /// An estimator had nothing to work with.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Overflow(_) => "overflow",
            Error::Divergence { .. } => "divergence",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Conditioning { .. } => "conditioning",
            Error::Bracket(_) => "bracket",
            Error::Degenerate(_) => "degenerate",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
