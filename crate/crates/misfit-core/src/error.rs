//! Error taxonomy shared by the whole toolkit.
//!
//! Errors are grouped into three classes so that front ends can map them to
//! distinct process exit codes: domain problems (bad inputs, missing
//! capabilities), numeric failures, and regularity failures (the A1/A2
//! conditions a misspecified model must satisfy for the bounds to exist).

use thiserror::Error;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Invalid input, out-of-domain parameter, or unsupported capability.
    Domain,
    /// Numerical breakdown: divergence, degeneracy, non-convergence.
    Numeric,
    /// Violation of the regularity assumptions (unique interior KLD
    /// minimizer; non-singular expected Hessian).
    Regularity,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("parameter outside its domain: {0}")]
    DomainViolation(String),

    #[error("capability unavailable: {0}")]
    Capability(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    /// Multi-start disagreement: the KLD (or likelihood) minimizer is not
    /// numerically unique, so assumption A1 fails.
    #[error("non-unique minimizer (A1 violated): {0}")]
    NonUniqueMinimizer(String),

    /// The expected Hessian of the assumed log-density is singular (A2).
    #[error("singular expected Hessian (A2 violated): {0}")]
    SingularHessian(String),

    #[error("minimizer on the boundary of the parameter space: {0}")]
    Boundary(String),

    /// Posterior mass escaping the integration grid.
    #[error("posterior grid failed to capture the mass: {0}")]
    Coverage(String),

    /// Several posterior-loss minimizers beyond tolerance.
    #[error("ambiguous minimizer: {0}")]
    AmbiguousMinimizer(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidInput(_) | DomainViolation(_) | Capability(_) | InsufficientData(_) => {
                ErrorClass::Domain
            }
            Numeric(_) | DegenerateSample(_) | NonConvergence(_) | Coverage(_) => {
                ErrorClass::Numeric
            }
            NonUniqueMinimizer(_) | SingularHessian(_) | Boundary(_) | AmbiguousMinimizer(_) => {
                ErrorClass::Regularity
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
