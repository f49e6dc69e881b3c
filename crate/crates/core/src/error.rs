use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the reservoir, conceptor and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid range {from}..{to} for a sequence of length {len}")]
    Range { from: usize, to: usize, len: usize },

    #[error("aperture must be finite and positive, got {0}")]
    Aperture(f64),

    #[error("no washout convergence within {steps} steps (final distance {residual:e})")]
    NoConvergence { steps: usize, residual: f64 },

    #[error("linear system is singular (regularization {rho}); use a positive regularization constant")]
    Singular { rho: f64 },

    #[error("state diverged at step {step} of pattern {pattern}: {detail}")]
    Divergence {
        pattern: usize,
        step: usize,
        detail: String,
    },

    #[error("target has zero variance; NRMSE is undefined")]
    ZeroVariance,

    #[error("integration of {system} produced non-finite values at step {step}")]
    Integration { system: &'static str, step: usize },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl Into<PathBuf>,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            column,
            message: message.into(),
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            actual,
        })
    }
}

pub(crate) fn check_aperture(aperture: f64) -> Result<()> {
    if aperture.is_finite() && aperture > 0.0 {
        Ok(())
    } else {
        Err(Error::Aperture(aperture))
    }
}
