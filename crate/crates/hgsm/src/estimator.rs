//! The thresholded orthogonal series estimator and exact error evaluation.
//!
//! Coefficient estimates are `Y_j / X_j` wherever `X_j^2 >= eps` and zero
//! otherwise; truncating the resulting sequence at a dimension `k` gives
//! the series estimator whose squared distance to the truth decomposes
//! into a stochastic prefix part and the deterministic tail bias.

use crate::model::{ObservationSet, ProblemInstance};
use crate::weights::WeightSequence;
use crate::{Error, Result};

/// Series estimator truncated at dimension `k`.
///
/// `prefix_norms[m - 1]` holds `S_m = sum_{l <= m} omega_l c_l^2`, the
/// squared weighted norm of the estimator at dimension `m`. These partial
/// sums are what the selection contrast consumes: for `m >= m'` the
/// squared distance between the two truncations is exactly `S_m - S_m'`.
#[derive(Debug, Clone)]
pub struct EstimatorOutput {
    pub k: usize,
    pub coeffs: Vec<f64>,
    pub prefix_norms: Vec<f64>,
}

/// One thresholded coefficient: `y / x` when `x^2 >= eps`, else 0.
/// `eps` must be positive, which makes the division safe.
pub fn coefficient(y: f64, x: f64, eps: f64) -> f64 {
    debug_assert!(eps > 0.0);
    if x * x >= eps {
        y / x
    } else {
        0.0
    }
}

/// Runs the thresholded estimator on the first `k` coordinates.
pub fn estimate(
    obs: &ObservationSet,
    k: usize,
    omega: &WeightSequence,
) -> Result<EstimatorOutput> {
    if k == 0 || k > obs.len() {
        return Err(Error::DimensionOutOfRange { k, max: obs.len() });
    }
    let eps = obs.noise.eps();
    let mut coeffs = Vec::with_capacity(k);
    let mut prefix_norms = Vec::with_capacity(k);
    let mut s = 0.0;
    for j in 1..=k {
        let c = coefficient(obs.y[j - 1], obs.x[j - 1], eps);
        s += omega.eval(j)? * c * c;
        coeffs.push(c);
        prefix_norms.push(s);
    }
    Ok(EstimatorOutput {
        k,
        coeffs,
        prefix_norms,
    })
}

/// Squared projection bias `sum_{l > k} omega_l f_l^2` of truncating the
/// truth at dimension `k >= 1`, summed over the instance range.
pub fn projection_bias_sq(
    instance: &ProblemInstance,
    omega: &WeightSequence,
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::IndexZero);
    }
    let mut tail = 0.0;
    for l in (k + 1..=instance.len()).rev() {
        let f = instance.coeffs[l - 1];
        tail += omega.eval(l)? * f * f;
    }
    Ok(tail)
}

/// Exact squared error of an estimator output against a known truth:
/// `sum_{j <= k} omega_j (c_j - f_j)^2 + sum_{j > k} omega_j f_j^2`.
pub fn risk_error_sq(
    est: &EstimatorOutput,
    instance: &ProblemInstance,
    omega: &WeightSequence,
) -> Result<f64> {
    if est.k > instance.len() {
        return Err(Error::LengthMismatch {
            what: "estimator dimension vs instance range",
            expected: instance.len(),
            got: est.k,
        });
    }
    let mut err = 0.0;
    for j in 1..=est.k {
        let d = est.coeffs[j - 1] - instance.coeffs[j - 1];
        err += omega.eval(j)? * d * d;
    }
    Ok(err + projection_bias_sq(instance, omega, est.k)?)
}
