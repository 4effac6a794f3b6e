//! Error types shared across the crate.

use crate::network::Direction;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature hit its subdivision budget before reaching the
    /// requested tolerance. Carries the best estimate obtained so far.
    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (partial estimate {partial:e}, error estimate {error:e})"
    )]
    QuadratureNonConvergence {
        partial: f64,
        error: f64,
        subdivisions: usize,
    },

    /// A serving-distance density was requested for a tier that carries
    /// (numerically) no association mass in the given direction.
    #[error("tier {tier} carries no association mass for {direction}")]
    NoMassInTier { tier: usize, direction: Direction },

    /// A Monte Carlo realization contains no eligible serving candidate
    /// (no sub-6 GHz tier configured and no LOS mmWave/THz base station drawn).
    #[error("realization has no eligible serving candidate")]
    NoCandidate,
}

pub type Result<T> = std::result::Result<T, Error>;
