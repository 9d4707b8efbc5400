use thiserror::Error;

/// Failures reported by the library.
///
/// Variants are split between invalid input (`is_validation`) and numerical
/// breakdown so that front ends can map them to distinct exit statuses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("no propagating mode: kX/pi = {0}")]
    NoPropagatingMode(f64),
    #[error("too close to a modal cutoff: {0}")]
    NearCutoff(String),
    #[error("eigenvalues {0} and {1} are not separated")]
    Degenerate(usize, usize),
    #[error("forward scattering check failed: max ratio {0:e}")]
    ForwardScattering(f64),
    #[error("quadrature did not converge on [{a}, {b}] (error estimate {err:e})")]
    Quadrature { a: f64, b: f64, err: f64 },
    #[error("non-finite amplitude at range {zeta} (realization {index}, seed {seed})")]
    NonFinite { zeta: f64, index: u64, seed: u64 },
    #[error("reducible coupling: second eigenvalue {0:e} is not negative")]
    ReducibleCoupling(f64),
    #[error("evanescent tail bound {bound:e} exceeds tolerance {tol:e}")]
    TailBound { bound: f64, tol: f64 },
    #[error("provenance mismatch: {0}")]
    Provenance(String),
}

impl Error {
    /// True when the failure is caused by the caller's configuration rather
    /// than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_)
                | Error::NoPropagatingMode(_)
                | Error::NearCutoff(_)
                | Error::ForwardScattering(_)
                | Error::Provenance(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
