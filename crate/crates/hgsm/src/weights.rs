//! Weight sequences and the admissibility conditions they must satisfy.
//!
//! Three strictly positive sequences parameterize the problem classes: the
//! norm weights `omega` fixing how estimation errors are measured, the
//! solution weights `s` defining the smoothness ellipsoid, and the
//! eigenvalue weights `b` pinning the decay of the operator spectrum. An
//! admissible triple is normalised to 1 at the first index, keeps
//! `omega_j / s_j` non-increasing, and keeps `b_j` non-increasing.
//!
//! Exponentially decaying `b` underflows f64 near index 27 (for decay
//! exponent 1), so all order comparisons against such sequences elsewhere
//! in the crate go through [`WeightSequence::log_eval`], which stays exact
//! long after the linear value has degraded to a subnormal or zero.

use std::sync::Arc;

use crate::{Error, Result};

/// Relative slack used by positivity, normalisation and monotonicity
/// comparisons throughout the crate.
pub const COMPARISON_SLACK: f64 = 1e-12;

/// A lazily evaluated, strictly positive weight sequence over indices
/// 1, 2, 3, ...
#[derive(Debug, Clone)]
pub enum WeightSequence {
    /// `j^(2p)`: polynomial growth, the smoothness scale.
    Sobolev { p: f64 },
    /// `j^(-2b)`: polynomial decay, mildly ill-posed spectra.
    PolyDecay { b: f64 },
    /// `exp(1 - j^(2b))`: exponential decay, severely ill-posed spectra.
    /// The offset keeps the value at index 1 equal to 1, which the
    /// admissibility normalisation requires.
    ExpDecay { b: f64 },
    /// `j^(2s)`: growth weights of the error norm.
    Norm { s: f64 },
    /// The constant sequence 1, 1, 1, ...
    Constant,
    /// An explicit finite table. Evaluation past the end is an error,
    /// never an extrapolation.
    Table(Arc<[f64]>),
}

impl WeightSequence {
    /// Weight at 1-based index `j`.
    ///
    /// For [`WeightSequence::ExpDecay`] the value is exponentiated from
    /// [`log_eval`](Self::log_eval) and may be subnormal or exactly 0.0
    /// in linear scale while the log stays exact.
    pub fn eval(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::IndexZero);
        }
        match self {
            Self::Sobolev { p } => Ok((j as f64).powf(2.0 * p)),
            Self::PolyDecay { b } => Ok((j as f64).powf(-2.0 * b)),
            Self::ExpDecay { .. } => Ok(self.log_eval(j)?.exp()),
            Self::Norm { s } => Ok((j as f64).powf(2.0 * s)),
            Self::Constant => Ok(1.0),
            Self::Table(t) => {
                let v = *t.get(j - 1).ok_or(Error::TableExhausted { j, len: t.len() })?;
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonPositiveWeight { j, value: v })
                }
            }
        }
    }

    /// Natural logarithm of the weight at index `j`, exact even where
    /// [`eval`](Self::eval) underflows.
    pub fn log_eval(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::IndexZero);
        }
        match self {
            Self::Sobolev { p } => Ok(2.0 * p * (j as f64).ln()),
            Self::PolyDecay { b } => Ok(-2.0 * b * (j as f64).ln()),
            Self::ExpDecay { b } => Ok(1.0 - (j as f64).powf(2.0 * b)),
            Self::Norm { s } => Ok(2.0 * s * (j as f64).ln()),
            Self::Constant => Ok(0.0),
            Self::Table(_) => Ok(self.eval(j)?.ln()),
        }
    }

    /// Materialises values and logs for indices `1..=len`.
    pub fn table(&self, len: usize) -> Result<WeightTable> {
        let mut values = Vec::with_capacity(len);
        let mut logs = Vec::with_capacity(len);
        for j in 1..=len {
            values.push(self.eval(j)?);
            logs.push(self.log_eval(j)?);
        }
        Ok(WeightTable { values, logs })
    }
}

/// Precomputed values and natural logs of a weight sequence on `1..=len`.
#[derive(Debug, Clone)]
pub struct WeightTable {
    values: Vec<f64>,
    logs: Vec<f64>,
}

impl WeightTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at 1-based index `j`. Panics outside `1..=len`.
    pub fn value(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    /// Natural log at 1-based index `j`. Panics outside `1..=len`.
    pub fn log(&self, j: usize) -> f64 {
        self.logs[j - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn logs(&self) -> &[f64] {
        &self.logs
    }
}

/// Outcome of checking one weight triple on a finite index range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissibilityReport {
    /// Whether all three sequences equal 1 at index 1.
    pub normalized: bool,
    /// First index at which `omega/s` increased, if any.
    pub ratio_violation: Option<usize>,
    /// First index at which `b` increased, if any.
    pub decay_violation: Option<usize>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.normalized && self.ratio_violation.is_none() && self.decay_violation.is_none()
    }
}

/// Checks normalisation at the first index and the two monotonicity
/// conditions over `1..=j_max`. Ratio comparisons run on logs with slack
/// [`COMPARISON_SLACK`], so exponentially decaying sequences cannot
/// underflow the check.
pub fn check_admissible(
    omega: &WeightSequence,
    s: &WeightSequence,
    b: &WeightSequence,
    j_max: usize,
) -> Result<AdmissibilityReport> {
    if j_max < 2 {
        return Err(Error::InvalidParameter {
            name: "j_max",
            value: j_max as f64,
            constraint: "j_max >= 2",
        });
    }

    let normalized = [omega, s, b]
        .iter()
        .map(|w| w.eval(1))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .all(|v| (v - 1.0).abs() <= COMPARISON_SLACK);

    let mut ratio_violation = None;
    let mut prev = omega.log_eval(1)? - s.log_eval(1)?;
    for j in 2..=j_max {
        let cur = omega.log_eval(j)? - s.log_eval(j)?;
        if cur > prev + COMPARISON_SLACK {
            ratio_violation = Some(j);
            break;
        }
        prev = cur;
    }

    let mut decay_violation = None;
    let mut prev = b.log_eval(1)?;
    for j in 2..=j_max {
        let cur = b.log_eval(j)?;
        if cur > prev + COMPARISON_SLACK {
            decay_violation = Some(j);
            break;
        }
        prev = cur;
    }

    Ok(AdmissibilityReport {
        normalized,
        ratio_violation,
        decay_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_match_closed_forms_at_small_indices() {
        let sob = WeightSequence::Sobolev { p: 1.0 };
        assert_eq!(sob.eval(1).unwrap(), 1.0);
        assert_eq!(sob.eval(3).unwrap(), 9.0);

        let poly = WeightSequence::PolyDecay { b: 1.0 };
        assert_eq!(poly.eval(1).unwrap(), 1.0);
        assert_eq!(poly.eval(2).unwrap(), 0.25);

        let norm = WeightSequence::Norm { s: 1.5 };
        assert!((norm.eval(2).unwrap() - 8.0).abs() < 1e-12);

        assert_eq!(WeightSequence::Constant.eval(12345).unwrap(), 1.0);
    }

    #[test]
    fn exp_decay_is_normalised_at_the_first_index() {
        let exp = WeightSequence::ExpDecay { b: 1.0 };
        assert_eq!(exp.eval(1).unwrap(), 1.0);
        assert_eq!(exp.log_eval(1).unwrap(), 0.0);
        // exp(1 - 9) at index 3.
        let v = exp.eval(3).unwrap();
        assert!((v - (-8.0f64).exp()).abs() < 1e-18);
        assert!((v - 3.3546262790251185e-4).abs() < 1e-15);
    }

    #[test]
    fn exp_decay_log_survives_linear_underflow() {
        let exp = WeightSequence::ExpDecay { b: 1.0 };
        // Index 40: 1 - 1600 in the exponent, far below f64 range.
        assert_eq!(exp.eval(40).unwrap(), 0.0);
        assert_eq!(exp.log_eval(40).unwrap(), -1599.0);
        // Index 27 is right at the underflow edge; the log stays exact.
        assert_eq!(exp.log_eval(27).unwrap(), -728.0);
        assert!(exp.eval(26).unwrap() > 0.0);
    }

    #[test]
    fn log_eval_matches_log_of_eval_where_representable() {
        let families = [
            WeightSequence::Sobolev { p: 1.3 },
            WeightSequence::PolyDecay { b: 0.7 },
            WeightSequence::ExpDecay { b: 0.5 },
            WeightSequence::Norm { s: 2.0 },
            WeightSequence::Constant,
        ];
        for f in &families {
            for j in 1..=20 {
                let v = f.eval(j).unwrap();
                let lv = f.log_eval(j).unwrap();
                assert!(
                    (lv - v.ln()).abs() <= 1e-12 * lv.abs().max(1.0),
                    "family {f:?} index {j}: log {lv} vs ln(eval) {}",
                    v.ln()
                );
            }
        }
    }

    #[test]
    fn index_zero_is_rejected() {
        assert!(matches!(
            WeightSequence::Constant.eval(0),
            Err(Error::IndexZero)
        ));
        assert!(matches!(
            WeightSequence::Sobolev { p: 1.0 }.log_eval(0),
            Err(Error::IndexZero)
        ));
    }

    #[test]
    fn table_evaluation_past_the_end_is_an_error() {
        let t = WeightSequence::Table(Arc::from(vec![1.0, 0.5].into_boxed_slice()));
        assert_eq!(t.eval(2).unwrap(), 0.5);
        assert!(matches!(
            t.eval(3),
            Err(Error::TableExhausted { j: 3, len: 2 })
        ));
    }

    #[test]
    fn table_rejects_non_positive_entries() {
        let t = WeightSequence::Table(Arc::from(vec![1.0, 0.0].into_boxed_slice()));
        assert!(matches!(t.eval(2), Err(Error::NonPositiveWeight { j: 2, .. })));
    }

    #[test]
    fn admissible_triple_passes() {
        // omega = 1, s = j^2, b = j^-2.
        let report = check_admissible(
            &WeightSequence::Constant,
            &WeightSequence::Sobolev { p: 1.0 },
            &WeightSequence::PolyDecay { b: 1.0 },
            50,
        )
        .unwrap();
        assert!(report.is_admissible());

        // omega = s = j^2 (constant ratio), severely decaying b.
        let report = check_admissible(
            &WeightSequence::Norm { s: 1.0 },
            &WeightSequence::Sobolev { p: 1.0 },
            &WeightSequence::ExpDecay { b: 1.0 },
            50,
        )
        .unwrap();
        assert!(report.is_admissible());
    }

    #[test]
    fn increasing_ratio_fails_at_the_first_bad_index() {
        // omega = j^4 against s = j^2: ratio j^2 grows immediately.
        let report = check_admissible(
            &WeightSequence::Norm { s: 2.0 },
            &WeightSequence::Sobolev { p: 1.0 },
            &WeightSequence::PolyDecay { b: 1.0 },
            50,
        )
        .unwrap();
        assert!(!report.is_admissible());
        assert_eq!(report.ratio_violation, Some(2));
        assert_eq!(report.decay_violation, None);
    }

    #[test]
    fn growing_b_fails_the_decay_condition() {
        let report = check_admissible(
            &WeightSequence::Constant,
            &WeightSequence::Sobolev { p: 1.0 },
            &WeightSequence::Sobolev { p: 0.5 },
            10,
        )
        .unwrap();
        assert_eq!(report.decay_violation, Some(2));
    }

    #[test]
    fn denormalised_first_entry_is_reported() {
        let t = WeightSequence::Table(Arc::from(vec![2.0, 1.0].into_boxed_slice()));
        let report =
            check_admissible(&t, &WeightSequence::Constant, &WeightSequence::Constant, 2).unwrap();
        assert!(!report.normalized);
    }
}
