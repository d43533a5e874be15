use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid settings, such as an under-resolved quadrature grid.
    #[error("configuration error: {0}")]
    Config(String),

    /// Mismatched dimensions or incompatible inputs.
    #[error("usage error: {0}")]
    Usage(String),

    /// Adaptive integration could not reach the requested tolerance.
    #[error("integration did not converge: estimate {estimate:e}, error bound {error:e}, tolerance {tolerance:e}")]
    Convergence {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    /// Per-degree failure while building a spectrum.
    #[error("spectrum build failed at degree {degree}: {source}")]
    SpectrumDegree {
        degree: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix is not positive semidefinite (jitter {jitter:e} exceeded cap {cap:e})")]
    NotPsd { jitter: f64, cap: f64 },

    /// The contour integrand jumped across the principal branch cut.
    #[error("branch cut crossed near t = {t}: argument jumped from {from} to {to}")]
    BranchCut { t: f64, from: f64, to: f64 },

    /// An internal identity that should hold exactly was violated.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// A file was readable but its contents failed validation.
    #[error("integrity error in {path}: {reason}")]
    Integrity { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by numerical trouble.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Config(_) | Error::Usage(_))
    }
}
