//! Fully data-driven dimension selection.
//!
//! The procedure never sees the classes: it works with the observed
//! eigenvalues `X_j` alone. Three ingredients combine into the selection
//! rule:
//!
//! 1. Truncation bounds. `n_circ` caps the range using only the norm
//!    weights; on top of it, [`n_bound`] and [`m_bound`] scan a sequence
//!    `alpha` for the first index at which a signal-to-noise condition
//!    fails, and return the index right before it. Run on `alpha = X` they
//!    give the data-driven cap `k = min(n, m)`; run on the scaled class
//!    sequences `sqrt(4 d b)` and `sqrt(b / (4 d))` they give the
//!    deterministic companions that bracket the data-driven cap with high
//!    probability.
//! 2. Random penalties. `pen_k = constant * nu * delta_k` where `delta_k`
//!    blows a dimension count up by the worst weighted inverse squared
//!    signal seen so far, estimated by `X`.
//! 3. Contrast minimisation. `Psi_k = max_{k <= j <= K} (S_j - S_k -
//!    pen_j)` compares every extension of the current dimension against
//!    its penalty; the selected dimension minimises `Psi_k + pen_k`, ties
//!    resolved to the smallest index.
//!
//! All scan conditions compare in log scale. First-hit semantics apply
//! throughout: a scan takes the first index satisfying its condition even
//! if the condition fails again later.

use crate::estimator::{estimate, EstimatorOutput};
use crate::model::{ObservationSet, ProblemInstance};
use crate::weights::{WeightSequence, WeightTable};
use crate::{floor_recip, Error, Result};

/// Multiplier of the data-driven penalty `pen_k = 600 delta_k nu`.
pub const DEFAULT_PENALTY_CONSTANT: f64 = 600.0;

/// Multiplier of the deterministic reference penalty built from the true
/// eigenvalues, used by the event diagnostics.
pub const REFERENCE_PENALTY_CONSTANT: f64 = 60.0;

/// Upper factor of the penalty sandwich event: the data-driven penalty is
/// considered in agreement with the reference when it lies between one and
/// thirty times the reference.
pub const SANDWICH_FACTOR: f64 = 30.0;

/// Penalties and the ratios feeding them saturate here instead of
/// overflowing, so contrast arithmetic never forms `inf - inf`.
pub const SATURATION: f64 = 1e300;

/// Defensive cap on the iteration count of any defining-set scan.
pub const SCAN_HARD_CAP: usize = 10_000_000;

/// Provenance of an `alpha` sequence feeding `delta` or a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaTag {
    /// Observed eigenvalues `X`.
    Observed,
    /// True eigenvalues `a` (diagnostic mode).
    Eigenvalues,
    /// Upper class envelope `sqrt(4 d b)`.
    UpperClass,
    /// Lower class envelope `sqrt(b / (4 d))`.
    LowerClass,
}

/// A sequence `alpha` presented through `ln(alpha_j^2)`.
#[derive(Debug, Clone)]
pub enum AlphaSeq<'a> {
    /// Linear-scale values, e.g. the observed `X`. A value of exactly
    /// zero maps to negative infinity in log scale.
    Observed(&'a [f64]),
    /// Values already stored as `ln(alpha_j^2)`, e.g. the log companions
    /// of a problem instance.
    LogSq(&'a [f64]),
    /// A weight sequence scaled by a positive factor:
    /// `alpha_j^2 = scale * w_j`.
    ScaledWeights {
        weights: &'a WeightSequence,
        scale: f64,
    },
}

impl AlphaSeq<'_> {
    /// `ln(alpha_j^2)` at 1-based index `j`.
    pub fn log_alpha_sq(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::IndexZero);
        }
        match self {
            Self::Observed(v) => v
                .get(j - 1)
                .map(|x| 2.0 * x.abs().ln())
                .ok_or(Error::TableExhausted { j, len: v.len() }),
            Self::LogSq(v) => v
                .get(j - 1)
                .copied()
                .ok_or(Error::TableExhausted { j, len: v.len() }),
            Self::ScaledWeights { weights, scale } => {
                Ok(scale.ln() + weights.log_eval(j)?)
            }
        }
    }

    /// Largest evaluable index, if the sequence is finite.
    pub fn limit(&self) -> Option<usize> {
        match self {
            Self::Observed(v) | Self::LogSq(v) => Some(v.len()),
            Self::ScaledWeights { .. } => None,
        }
    }
}

/// Oscillation exponent `v = 1 / (8 ln ln(1/eps + 20))` of the spectral
/// cutoff rule. Decreasing in the argument, with values inside
/// (0, 0.1123] for `eps` in (0, 1).
pub fn v_eps(eps: f64) -> f64 {
    debug_assert!(eps > 0.0 && eps < 1.0);
    1.0 / (8.0 * (1.0 / eps + 20.0).ln().ln())
}

/// Computes `(Delta_k, delta_k)` from the running maximum of
/// `ln(omega_j / alpha_j^2)`, saturating instead of overflowing.
pub(crate) fn delta_from_log(k: usize, log_dmax: f64) -> (f64, f64) {
    let big = log_dmax.exp().min(SATURATION);
    let lk2 = ((k + 2) as f64).ln();
    let factor = log_dmax.max(lk2) / lk2;
    let small = ((k as f64) * big * factor).min(SATURATION);
    (big, small)
}

/// `Delta_k = max_{j <= k} omega_j / alpha_j^2` and the dimension-scaled
/// variant `delta_k = k Delta_k ln(Delta_k v (k+2)) / ln(k+2)`.
///
/// Errors when some `alpha_j` is exactly zero; class sequences are
/// strictly positive, and observed sequences should go through
/// [`penalty_table`], which saturates instead of failing.
pub fn delta(k: usize, alpha: &AlphaSeq, omega: &WeightTable) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::IndexZero);
    }
    if omega.len() < k {
        return Err(Error::LengthMismatch {
            what: "omega table vs requested dimension",
            expected: k,
            got: omega.len(),
        });
    }
    let mut log_dmax = f64::NEG_INFINITY;
    for j in 1..=k {
        let la = alpha.log_alpha_sq(j)?;
        if la == f64::NEG_INFINITY {
            return Err(Error::ZeroAlpha { j });
        }
        log_dmax = log_dmax.max(omega.log(j) - la);
    }
    Ok(delta_from_log(k, log_dmax))
}

/// Penalty table over dimensions `1..=len` for one `alpha` sequence.
#[derive(Debug, Clone)]
pub struct PenaltyTable {
    pub tag: AlphaTag,
    pub constant: f64,
    pub big_delta: Vec<f64>,
    pub small_delta: Vec<f64>,
    pub pen: Vec<f64>,
}

/// Builds `pen_k = constant * nu * delta_k` for `k = 1..=len`.
///
/// An observed `alpha_j = 0` saturates `Delta` at [`SATURATION`] (such
/// dimensions can never win the contrast against a finite competitor). A
/// final running maximum makes the table non-decreasing even under
/// worst-case rounding.
pub fn penalty_table(
    alpha: &AlphaSeq,
    omega: &WeightTable,
    nu: f64,
    len: usize,
    constant: f64,
    tag: AlphaTag,
) -> Result<PenaltyTable> {
    if len == 0 {
        return Err(Error::IndexZero);
    }
    if omega.len() < len {
        return Err(Error::LengthMismatch {
            what: "omega table vs penalty range",
            expected: len,
            got: omega.len(),
        });
    }
    if !(constant > 0.0) {
        return Err(Error::InvalidParameter {
            name: "constant",
            value: constant,
            constraint: "constant > 0",
        });
    }
    let mut big_delta = Vec::with_capacity(len);
    let mut small_delta = Vec::with_capacity(len);
    let mut pen = Vec::with_capacity(len);
    let mut log_dmax = f64::NEG_INFINITY;
    for k in 1..=len {
        log_dmax = log_dmax.max(omega.log(k) - alpha.log_alpha_sq(k)?);
        let (big, small) = delta_from_log(k, log_dmax);
        big_delta.push(big);
        small_delta.push(small);
        let p = (constant * nu * small).min(SATURATION);
        pen.push(match pen.last() {
            Some(&prev) => p.max(prev),
            None => p,
        });
    }
    Ok(PenaltyTable {
        tag,
        constant,
        big_delta,
        small_delta,
        pen,
    })
}

/// Data-driven penalty at a single dimension.
pub fn pen_hat(
    obs: &ObservationSet,
    k: usize,
    omega: &WeightSequence,
    constant: f64,
) -> Result<f64> {
    let wt = omega.table(k)?;
    let table = penalty_table(
        &AlphaSeq::Observed(&obs.x),
        &wt,
        obs.noise.nu(),
        k,
        constant,
        AlphaTag::Observed,
    )?;
    Ok(table.pen[k - 1])
}

/// Value of a range scan together with a truncation marker.
#[derive(Debug, Clone, Copy)]
pub struct ScanOutcome {
    pub value: usize,
    /// True when the scan was cut short of its defining range (by the
    /// available data length or the hard iteration cap) without the
    /// defining condition having fired, so the reported value is the
    /// largest index that could be verified.
    pub truncated: bool,
}

/// `n_circ`: the largest `N <= floor(1/nu)` with
/// `max_{j <= N} omega_j <= 1/nu`.
pub fn n_circ(nu: f64, omega: &WeightSequence, cap: Option<usize>) -> Result<ScanOutcome> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter {
            name: "nu",
            value: nu,
            constraint: "0 < nu < 1",
        });
    }
    let full_end = floor_recip(nu);
    let end = full_end.min(SCAN_HARD_CAP).min(cap.unwrap_or(usize::MAX));
    let recip = 1.0 / nu;
    let mut wplus = 0.0f64;
    let mut value = 0usize;
    for n in 1..=end {
        wplus = wplus.max(omega.eval(n)?);
        if wplus <= recip {
            value = n;
        } else {
            // The running maximum only grows; nothing later can qualify.
            return Ok(ScanOutcome {
                value,
                truncated: false,
            });
        }
    }
    if value == 0 {
        return Err(Error::InvalidParameter {
            name: "omega_1",
            value: omega.eval(1)?,
            constraint: "omega_1 <= 1/nu",
        });
    }
    Ok(ScanOutcome {
        value,
        truncated: end < full_end,
    })
}

/// Shared engine of the two defining-set scans: first `j` in
/// `2..=range_end` with `log_alpha_sq(j) <= threshold(j)` yields
/// `value = j - 1`; no hit falls back to `range_end` and marks truncation
/// when the verified range is shorter than the full one.
fn first_hit_scan(
    range_end: usize,
    full_end: usize,
    inherited_truncation: bool,
    mut log_condition: impl FnMut(usize) -> Result<(f64, f64)>,
) -> Result<ScanOutcome> {
    for j in 2..=range_end {
        let (lhs, rhs) = log_condition(j)?;
        if lhs <= rhs {
            return Ok(ScanOutcome {
                value: j - 1,
                truncated: false,
            });
        }
    }
    Ok(ScanOutcome {
        value: range_end.max(1),
        truncated: inherited_truncation || range_end < full_end,
    })
}

/// `N^alpha`: one less than the first `j >= 2` within the `n_circ` range
/// where `alpha_j^2 / (j max_{i <= j} omega_i)` drops to `nu |ln nu|`;
/// falls back to `n_circ` when no index triggers.
pub fn n_bound(
    nu: f64,
    omega: &WeightSequence,
    alpha: &AlphaSeq,
    ncirc: ScanOutcome,
) -> Result<ScanOutcome> {
    let log_thr = (nu * nu.ln().abs()).ln();
    let range_end = ncirc
        .value
        .min(alpha.limit().unwrap_or(usize::MAX))
        .min(SCAN_HARD_CAP);
    let mut wplus = omega.eval(1)?;
    first_hit_scan(range_end, ncirc.value, ncirc.truncated, |j| {
        wplus = wplus.max(omega.eval(j)?);
        let lhs = alpha.log_alpha_sq(j)? - (j as f64).ln() - wplus.ln();
        Ok((lhs, log_thr))
    })
}

/// `M^alpha`: one less than the first `j >= 2` up to `floor(1/eps)` where
/// `alpha_j^2 <= eps^(1 - v_eps)`; falls back to `floor(1/eps)`.
pub fn m_bound(eps: f64, alpha: &AlphaSeq, cap: Option<usize>) -> Result<ScanOutcome> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            constraint: "0 < eps < 1",
        });
    }
    let log_thr = (1.0 - v_eps(eps)) * eps.ln();
    let full_end = floor_recip(eps);
    let range_end = full_end
        .min(alpha.limit().unwrap_or(usize::MAX))
        .min(SCAN_HARD_CAP)
        .min(cap.unwrap_or(usize::MAX));
    first_hit_scan(range_end, full_end, false, |j| {
        Ok((alpha.log_alpha_sq(j)?, log_thr))
    })
}

/// Truncation bounds computed from one `alpha` sequence.
#[derive(Debug, Clone, Copy)]
pub struct DimensionBounds {
    pub n_circ: usize,
    pub v_eps: f64,
    pub n: usize,
    pub m: usize,
    /// `min(n, m)`, the admissible dimension cap.
    pub k: usize,
    pub truncated_scan: bool,
}

/// Runs both defining-set scans on one `alpha` sequence. `cap` limits all
/// scan ranges, typically to the available data length.
pub fn dimension_bounds(
    nu: f64,
    eps: f64,
    omega: &WeightSequence,
    alpha: &AlphaSeq,
    cap: Option<usize>,
) -> Result<DimensionBounds> {
    let nc = n_circ(nu, omega, cap)?;
    let n = n_bound(nu, omega, alpha, nc)?;
    let m = m_bound(eps, alpha, cap)?;
    Ok(DimensionBounds {
        n_circ: nc.value,
        v_eps: v_eps(eps),
        n: n.value,
        m: m.value,
        k: n.value.min(m.value),
        truncated_scan: nc.truncated || n.truncated || m.truncated,
    })
}

/// Contrast values and the selected dimension.
#[derive(Debug, Clone)]
pub struct SelectionTrace {
    /// `Psi_k` for `k = 1..=K`.
    pub contrast: Vec<f64>,
    /// `Psi_k + pen_k`.
    pub penalized: Vec<f64>,
    /// Smallest minimiser of the penalized contrast.
    pub k_hat: usize,
}

/// Evaluates the contrast `Psi_k = max_{k <= j <= K} (S_j - S_k - pen_j)`
/// for every `k` with one backward sweep and selects the smallest
/// minimiser of `Psi_k + pen_k`.
///
/// The penalized contrast is formed as
/// `max_{k <= j <= K} (S_j - pen_j) - (S_k - pen_k)`, a single rounding
/// per dimension. Whenever the maximum is attained at `j = k` the value
/// is exactly 0.0, so dimensions that are tied in exact arithmetic stay
/// tied in floating point and the smallest one wins; forming
/// `Psi_k + pen_k` from the two rounded halves instead would break such
/// ties by accumulated rounding noise once the penalties dwarf the
/// prefix norms.
pub fn contrast_and_select(est: &EstimatorOutput, pen: &[f64]) -> Result<SelectionTrace> {
    let kk = est.k;
    if pen.len() != kk {
        return Err(Error::LengthMismatch {
            what: "penalties vs estimator dimension",
            expected: kk,
            got: pen.len(),
        });
    }
    for i in 1..kk {
        let tol = 1e-12 * pen[i - 1].abs().max(1.0);
        if pen[i] < pen[i - 1] - tol {
            return Err(Error::DecreasingPenalty { k: i + 1 });
        }
    }

    let s = &est.prefix_norms;
    let mut contrast = vec![0.0; kk];
    let mut penalized = vec![0.0; kk];
    let mut running = f64::NEG_INFINITY;
    for k in (0..kk).rev() {
        let t = s[k] - pen[k];
        running = running.max(t);
        contrast[k] = running - s[k];
        penalized[k] = running - t;
    }
    let mut k_hat = 1;
    let mut best = penalized[0];
    for k in 2..=kk {
        if penalized[k - 1] < best {
            best = penalized[k - 1];
            k_hat = k;
        }
    }
    Ok(SelectionTrace {
        contrast,
        penalized,
        k_hat,
    })
}

/// Everything produced by one run of the data-driven procedure.
#[derive(Debug, Clone)]
pub struct AdaptiveFit {
    /// Estimator truncated at the selected dimension.
    pub fit: EstimatorOutput,
    /// Estimator at the full admissible cap, from which `fit` was cut.
    pub full: EstimatorOutput,
    pub trace: SelectionTrace,
    pub bounds: DimensionBounds,
    pub penalties: PenaltyTable,
}

/// Runs the complete data-driven pipeline on one observation set: data
/// cap, penalties, contrast, selection.
pub fn adaptive_estimate(
    obs: &ObservationSet,
    omega: &WeightSequence,
    penalty_constant: f64,
) -> Result<AdaptiveFit> {
    if obs.is_empty() {
        return Err(Error::InvalidParameter {
            name: "observations",
            value: 0.0,
            constraint: "at least one coordinate",
        });
    }
    let nu = obs.noise.nu();
    let alpha = AlphaSeq::Observed(&obs.x);
    let bounds = dimension_bounds(nu, obs.noise.eps(), omega, &alpha, Some(obs.len()))?;
    let full = estimate(obs, bounds.k, omega)?;
    let wt = omega.table(bounds.k)?;
    let penalties = penalty_table(&alpha, &wt, nu, bounds.k, penalty_constant, AlphaTag::Observed)?;
    let trace = contrast_and_select(&full, &penalties.pen)?;
    let k = trace.k_hat;
    let fit = EstimatorOutput {
        k,
        coeffs: full.coeffs[..k].to_vec(),
        prefix_norms: full.prefix_norms[..k].to_vec(),
    };
    Ok(AdaptiveFit {
        fit,
        full,
        trace,
        bounds,
        penalties,
    })
}

/// Indicator values of the three events comparing data-driven quantities
/// with their class counterparts on one realization.
#[derive(Debug, Clone, Copy)]
pub struct EventFlags {
    /// All observed eigenvalues up to the deterministic spectral cutoff
    /// are two-sided close to the truth and clear the threshold.
    pub omega_eps: bool,
    /// All relative eigenvalue errors up to one past the cutoff stay
    /// within one third.
    pub omega_tilde: bool,
    /// The data-driven penalty is sandwiched by the reference penalty and
    /// the data-driven cap falls inside its deterministic bracket.
    pub mho: bool,
}

/// Deterministic reference quantities for the event diagnostics, computed
/// once per `(instance, noise)` configuration. Uses the standard penalty
/// constants.
#[derive(Debug, Clone)]
pub struct EventContext {
    pub nu: f64,
    pub eps: f64,
    pub omega: WeightSequence,
    /// Spectral cutoff on the upper class envelope.
    pub m_plus: usize,
    pub bounds_upper: DimensionBounds,
    pub bounds_lower: DimensionBounds,
    /// Reference penalties on the true eigenvalues over the checkable
    /// range `1..=k_plus_avail`.
    pub pen_reference: PenaltyTable,
    pub(crate) wt_upper: WeightTable,
    /// Upper cap clamped to the instance range.
    pub k_plus_avail: usize,
}

/// Builds the deterministic side of the event diagnostics.
pub fn event_context(
    instance: &ProblemInstance,
    nu: f64,
    eps: f64,
    omega: &WeightSequence,
) -> Result<EventContext> {
    let d = instance.params.d;
    let b = &instance.params.b;
    let upper = dimension_bounds(
        nu,
        eps,
        omega,
        &AlphaSeq::ScaledWeights {
            weights: b,
            scale: 4.0 * d,
        },
        None,
    )?;
    let lower = dimension_bounds(
        nu,
        eps,
        omega,
        &AlphaSeq::ScaledWeights {
            weights: b,
            scale: 1.0 / (4.0 * d),
        },
        None,
    )?;
    let k_plus_avail = upper.k.min(instance.len());
    let wt_upper = omega.table(k_plus_avail)?;
    let pen_reference = penalty_table(
        &AlphaSeq::LogSq(&instance.log_eigenvalues_sq),
        &wt_upper,
        nu,
        k_plus_avail,
        REFERENCE_PENALTY_CONSTANT,
        AlphaTag::Eigenvalues,
    )?;
    Ok(EventContext {
        nu,
        eps,
        omega: omega.clone(),
        m_plus: upper.m,
        bounds_upper: upper,
        bounds_lower: lower,
        pen_reference,
        wt_upper,
        k_plus_avail,
    })
}

/// Evaluates the three event indicators on one realization, clamping
/// every range to the coordinates the observation set covers. The
/// data-driven cap is recomputed from `obs`; for that recomputation to
/// match the full-range definition, `obs` must extend over the scan
/// ranges (its length is used as the scan cap).
pub fn event_flags(
    obs: &ObservationSet,
    instance: &ProblemInstance,
    ctx: &EventContext,
) -> Result<EventFlags> {
    let bounds = dimension_bounds(
        ctx.nu,
        ctx.eps,
        &ctx.omega,
        &AlphaSeq::Observed(&obs.x),
        Some(obs.len()),
    )?;
    event_flags_given_cap(obs, instance, ctx, bounds.k)
}

/// Event indicators with the data-driven cap supplied by the caller
/// (used by scanning code that has already computed it lazily).
pub(crate) fn event_flags_given_cap(
    obs: &ObservationSet,
    instance: &ProblemInstance,
    ctx: &EventContext,
    k_hat_cap: usize,
) -> Result<EventFlags> {
    let eps = ctx.eps;
    let len = obs.len().min(instance.len());

    // Two-sided closeness |1/X - 1/a| <= 1/(2a) is equivalent to
    // X/a inside [2/3, 2]; the ratio form stays stable when the
    // eigenvalues underflow. Positive comparisons keep NaN failing.
    let mut omega_eps = true;
    for j in 1..=ctx.m_plus.min(len) {
        let ratio = obs.x[j - 1] / instance.eigenvalues[j - 1];
        let ok = ratio >= 2.0 / 3.0
            && ratio <= 2.0
            && obs.x[j - 1] * obs.x[j - 1] >= eps;
        if !ok {
            omega_eps = false;
            break;
        }
    }

    let mut omega_tilde = true;
    for j in 1..=(ctx.m_plus + 1).min(len) {
        let ratio = obs.x[j - 1] / instance.eigenvalues[j - 1];
        if !((ratio - 1.0).abs() <= 1.0 / 3.0) {
            omega_tilde = false;
            break;
        }
    }

    let k_range = ctx.k_plus_avail.min(len);
    if k_range < ctx.k_plus_avail {
        return Err(Error::LengthMismatch {
            what: "observations vs upper event range",
            expected: ctx.k_plus_avail,
            got: obs.len(),
        });
    }
    let pens = penalty_table(
        &AlphaSeq::Observed(&obs.x),
        &ctx.wt_upper,
        ctx.nu,
        k_range,
        DEFAULT_PENALTY_CONSTANT,
        AlphaTag::Observed,
    )?;
    let mut sandwich = true;
    for k in 0..k_range {
        let reference = ctx.pen_reference.pen[k];
        let hat = pens.pen[k];
        let ok = reference <= hat * (1.0 + 1e-12)
            && hat <= SANDWICH_FACTOR * reference * (1.0 + 1e-12);
        if !ok {
            sandwich = false;
            break;
        }
    }
    let bracket = ctx.bounds_lower.k <= k_hat_cap && k_hat_cap <= ctx.bounds_upper.k;

    Ok(EventFlags {
        omega_eps,
        omega_tilde,
        mho: sandwich && bracket,
    })
}

/// One grid entry of the spectral cutoff growth check.
#[derive(Debug, Clone, Copy)]
pub struct CutoffEntry {
    pub eps: f64,
    pub m_plus: usize,
    /// `log10` of `eps^-7 b_{M+1}^{-1/2} exp(-b_{M+1} / (72 eps d))`.
    pub log10_value: f64,
}

/// Empirical behaviour of the cutoff growth expression along an `eps`
/// grid.
#[derive(Debug, Clone)]
pub struct CutoffReport {
    /// Entries sorted by decreasing `eps`.
    pub entries: Vec<CutoffEntry>,
    /// Largest `log10` value over the grid, the empirical constant.
    pub max_log10: f64,
    /// True when the maximum sits at the smallest `eps` and the values
    /// are still growing there, so no finite constant is in sight.
    pub diverging: bool,
    /// How the two free symbols of the expression are read.
    pub interpretation: &'static str,
}

/// Evaluates the cutoff growth expression over an `eps` grid, in log
/// scale throughout.
pub fn check_cutoff_condition(
    b: &WeightSequence,
    d: f64,
    eps_grid: &[f64],
) -> Result<CutoffReport> {
    if eps_grid.is_empty() {
        return Err(Error::NotEnoughPoints { needed: 1, got: 0 });
    }
    let mut entries = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: eps,
                constraint: "0 < eps < 1",
            });
        }
        let m = m_bound(
            eps,
            &AlphaSeq::ScaledWeights {
                weights: b,
                scale: 4.0 * d,
            },
            None,
        )?;
        let log_b_next = b.log_eval(m.value + 1)?;
        let exponent = (log_b_next - (72.0 * eps * d).ln()).exp();
        let ln_value = -7.0 * eps.ln() - 0.5 * log_b_next - exponent;
        entries.push(CutoffEntry {
            eps,
            m_plus: m.value,
            log10_value: ln_value / std::f64::consts::LN_10,
        });
    }
    entries.sort_by(|a, b| b.eps.partial_cmp(&a.eps).expect("finite eps"));
    let (mut max_log10, mut argmax) = (f64::NEG_INFINITY, 0);
    for (i, e) in entries.iter().enumerate() {
        if e.log10_value > max_log10 {
            max_log10 = e.log10_value;
            argmax = i;
        }
    }
    let n = entries.len();
    let diverging =
        n >= 2 && argmax == n - 1 && entries[n - 1].log10_value > entries[n - 2].log10_value;
    Ok(CutoffReport {
        entries,
        max_log10,
        diverging,
        interpretation:
            "cutoff index read as the m-bound of sqrt(4 d b); corridor constant read as d",
    })
}
