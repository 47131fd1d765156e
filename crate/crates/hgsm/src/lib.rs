//! Estimation in a hierarchical Gaussian sequence space model.
//!
//! The model observes two independent Gaussian sequences: noisy image
//! coefficients `Y_j = a_j f_j + sqrt(nu) xi_j` and noisy operator
//! eigenvalues `X_j = a_j + sqrt(eps) eta_j`. The goal is to recover the
//! solution coefficients `f_j` when both the solution and the eigenvalue
//! sequence are unknown, with the accuracy measured in a weighted squared
//! sequence norm.
//!
//! The crate provides
//!
//! * weight-sequence families and admissibility checks ([`weights`]),
//! * problem instances, class-membership checks and reproducible
//!   observation simulation ([`model`]),
//! * the thresholded orthogonal series estimator with exact error
//!   evaluation against a known truth ([`estimator`]),
//! * the minimax benchmark quantities: oracle dimension, attainable rates
//!   and their closed forms for the standard families ([`oracle`]),
//! * the fully data-driven dimension selection rule built from random
//!   penalties and truncation bounds, plus its event diagnostics
//!   ([`adaptive`]),
//! * Monte Carlo risk estimation, rate-slope fitting and checkers for the
//!   deterministic and probabilistic inequalities behind the procedure
//!   ([`verify`]).
//!
//! Randomness follows a counter-based discipline: every normal draw is a
//! pure function of `(seed, replication, coordinate, stream)`, so Monte
//! Carlo aggregates are bit-identical for any worker count or execution
//! order.

pub mod weights;
pub mod model;
pub mod estimator;
pub mod oracle;
pub mod adaptive;
pub mod verify;

use thiserror::Error;

/// Error type shared by every module of this crate.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// Sequence indices start at 1; index 0 is outside every domain.
    #[error("sequence index 0 is outside the domain; indices start at 1")]
    IndexZero,

    /// A finite table was asked for an entry past its end.
    #[error("table has {len} entries, nothing at index {j}")]
    TableExhausted { j: usize, len: usize },

    /// A table entry violated strict positivity.
    #[error("weight at index {j} must be strictly positive and finite, got {value}")]
    NonPositiveWeight { j: usize, value: f64 },

    /// A scalar parameter failed its domain check.
    #[error("invalid parameter {name} = {value}: must satisfy {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A dimension argument fell outside the valid range.
    #[error("dimension k = {k} outside the valid range 1..={max}")]
    DimensionOutOfRange { k: usize, max: usize },

    /// Two sequences that must agree in length did not.
    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A ratio against alpha_j is undefined because alpha_j is zero.
    #[error("alpha sequence vanishes at index {j}; ratios are undefined")]
    ZeroAlpha { j: usize },

    /// A penalty sequence decreased although the selection rule requires
    /// it to be non-decreasing.
    #[error("penalty sequence decreases at index {k}")]
    DecreasingPenalty { k: usize },

    /// An unrecognised tag was supplied for an instance or family kind.
    #[error("unknown kind tag {given:?}")]
    UnknownKind { given: String },

    /// A regression was attempted on too few grid points.
    #[error("rate fit needs at least {needed} grid points, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },

    /// A log-log fit met a risk value that has no logarithm.
    #[error("risk at grid point {index} is not strictly positive")]
    NonPositiveRisk { index: usize },

    /// The requested worker pool could not be constructed.
    #[error("worker pool construction failed: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Floor of `1/x` for `x` in (0,1), guarded against the reciprocal
/// landing half an ulp below an integer (for example `1/0.001`
/// evaluating to 999.9999999999999).
pub(crate) fn floor_recip(x: f64) -> usize {
    let f = (1.0 / x).floor();
    let f = if (f + 1.0) * x <= 1.0 + 1e-12 { f + 1.0 } else { f };
    f as usize
}

/// Ceiling of `1/x` for `x` in (0,1), with the matching half-ulp guard.
pub(crate) fn ceil_recip(x: f64) -> usize {
    let c = (1.0 / x).ceil();
    let c = if (c - 1.0) * x >= 1.0 - 1e-12 { c - 1.0 } else { c };
    c as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_recip_handles_inexact_reciprocals() {
        assert_eq!(floor_recip(0.1), 10);
        assert_eq!(floor_recip(1e-3), 1000);
        assert_eq!(floor_recip(0.9), 1);
        assert_eq!(floor_recip(1.0 / 3.0), 3);
        assert_eq!(floor_recip(0.004), 250);
    }

    #[test]
    fn ceil_recip_handles_inexact_reciprocals() {
        assert_eq!(ceil_recip(0.1), 10);
        assert_eq!(ceil_recip(1e-3), 1000);
        assert_eq!(ceil_recip(0.9), 2);
        assert_eq!(ceil_recip(0.3), 4);
    }
}
