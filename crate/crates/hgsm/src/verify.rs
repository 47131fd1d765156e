//! Monte Carlo verification of the risk statements and the deterministic
//! inequalities behind them.
//!
//! Every routine here is reproducible down to the last bit: draws come
//! from the counter-based generator keyed by `(seed, replication,
//! coordinate, channel)`, replication results are collected in index
//! order, and the final reductions are compensated sums evaluated
//! sequentially. The reported numbers therefore do not depend on the
//! worker count.
//!
//! Checks come in two flavours. Deterministic inequalities (the selection
//! bound, the penalty scale bound) are asserted per realization or per
//! grid point and any violation is counted. Moment and probability bounds
//! are asserted up to three standard errors of the empirical estimate.

use rayon::prelude::*;
use rayon::ThreadPoolBuilder;

use crate::adaptive::{
    adaptive_estimate, contrast_and_select, event_context, event_flags_given_cap, n_bound,
    n_circ, penalty_table, v_eps, AlphaSeq, AlphaTag, SCAN_HARD_CAP,
};
use crate::estimator::{estimate, risk_error_sq, EstimatorOutput};
use crate::model::{
    simulate, simulate_prefix, LazyObservations, NoiseLevels, ProblemInstance,
};
use crate::oracle::{oracle_report, OracleReport};
use crate::weights::{WeightSequence, WeightTable};
use crate::{floor_recip, Error, Result};

/// Compensated accumulator (Neumaier's variant of Kahan summation).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mut s = KahanSum::default();
    for &x in xs {
        s.add(x);
    }
    let mean = s.value() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let mut d2 = KahanSum::default();
    for &x in xs {
        let d = x - mean;
        d2.add(d * d);
    }
    let var = d2.value() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Lower median together with an approximate 95% order-statistic band.
fn median_band(xs: &[f64]) -> (f64, f64, f64) {
    let mut sorted = xs.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let med = sorted[(n - 1) / 2];
    let half = 1.96 * (n as f64).sqrt() / 2.0;
    let centre = n as f64 / 2.0;
    let lo = (centre - half).floor().max(0.0) as usize;
    let hi = ((centre + half).ceil() as usize).min(n - 1);
    (med, sorted[lo], sorted[hi])
}

/// Outcome summary shared by the inequality checks.
#[derive(Debug, Clone)]
pub struct CheckReport {
    /// Short machine-readable name of the check.
    pub check: &'static str,
    pub trials: usize,
    pub violations: usize,
    /// Most adverse margin seen, positive numbers meaning violation.
    pub worst_margin: f64,
    pub notes: String,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

/// Evaluation of the selection bound on one realization.
#[derive(Debug, Clone, Copy)]
pub struct OracleInequalityOutcome {
    pub k_selected: usize,
    /// Squared weighted error of the selected estimator against the truth.
    pub lhs: f64,
    /// Smallest right-hand side over the admissible dimensions.
    pub min_rhs: f64,
    pub argmin_rhs: usize,
    /// `(lhs - min_rhs) / |min_rhs|`; at most zero when the bound holds.
    pub rel_margin: f64,
    pub pass: bool,
}

/// Checks, for one realization, that the error of the estimator truncated
/// at `k_selected` is bounded by
/// `min_k { 7 pen_k + 78 tail_k + 42 max_j (err_j - pen_j / 6)_+ }`,
/// where `err_j` is the weighted squared coefficient error up to `j` and
/// `tail_k` the squared projection bias. The bound holds for the
/// contrast-selected dimension whenever the penalties are non-decreasing;
/// passing any other `k_selected` probes the checker itself.
pub fn check_oracle_inequality(
    full: &EstimatorOutput,
    k_selected: usize,
    pen: &[f64],
    instance: &ProblemInstance,
    omega: &WeightSequence,
) -> Result<OracleInequalityOutcome> {
    let kk = full.k;
    if kk == 0 {
        return Err(Error::IndexZero);
    }
    if k_selected == 0 || k_selected > kk {
        return Err(Error::DimensionOutOfRange {
            k: k_selected,
            max: kk,
        });
    }
    if pen.len() != kk {
        return Err(Error::LengthMismatch {
            what: "penalties vs estimator dimension",
            expected: kk,
            got: pen.len(),
        });
    }
    if kk > instance.len() {
        return Err(Error::LengthMismatch {
            what: "estimator dimension vs instance range",
            expected: instance.len(),
            got: kk,
        });
    }

    // tail[k] = sum_{l > k} omega_l f_l^2, accumulated backwards.
    let mut tail = vec![0.0; kk + 1];
    let mut acc = 0.0;
    for l in (kk + 1..=instance.len()).rev() {
        let f = instance.coeffs[l - 1];
        acc += omega.eval(l)? * f * f;
    }
    tail[kk] = acc;
    for k in (0..kk).rev() {
        let f = instance.coeffs[k];
        tail[k] = tail[k + 1] + omega.eval(k + 1)? * f * f;
    }

    // err[j] = sum_{l <= j} omega_l (chat_l - f_l)^2.
    let mut err = vec![0.0; kk + 1];
    let mut acc = 0.0;
    for j in 1..=kk {
        let d = full.coeffs[j - 1] - instance.coeffs[j - 1];
        acc += omega.eval(j)? * d * d;
        err[j] = acc;
    }

    let mut maxterm = 0.0f64;
    for j in 1..=kk {
        maxterm = maxterm.max(err[j] - pen[j - 1] / 6.0);
    }

    let lhs = err[k_selected] + tail[k_selected];
    let mut min_rhs = f64::INFINITY;
    let mut argmin_rhs = 1;
    for k in 1..=kk {
        let rhs = 7.0 * pen[k - 1] + 78.0 * tail[k] + 42.0 * maxterm;
        if rhs < min_rhs {
            min_rhs = rhs;
            argmin_rhs = k;
        }
    }
    let pass = lhs <= min_rhs * (1.0 + 1e-9) + 1e-300;
    let rel_margin = (lhs - min_rhs) / min_rhs.abs().max(1e-300);
    Ok(OracleInequalityOutcome {
        k_selected,
        lhs,
        min_rhs,
        argmin_rhs,
        rel_margin,
        pass,
    })
}

/// Which estimator the Monte Carlo loop evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMode {
    /// Thresholded estimator truncated at the oracle dimension.
    OracleKStar,
    /// Fully data-driven estimator.
    Adaptive,
}

/// Configuration of one Monte Carlo risk evaluation.
#[derive(Debug, Clone, Copy)]
pub struct McConfig<'a> {
    pub instance: &'a ProblemInstance,
    pub noise: NoiseLevels,
    pub replications: usize,
    pub base_seed: u64,
    pub mode: EstimationMode,
    /// Penalty multiplier, only read in adaptive mode.
    pub penalty_constant: f64,
    /// Worker threads; zero uses the process-wide default pool.
    pub workers: usize,
}

/// Empirical risk statistics with the matching benchmark quantities.
#[derive(Debug, Clone)]
pub struct RiskReport {
    pub nu: f64,
    pub eps: f64,
    pub mode: EstimationMode,
    pub replications: usize,
    pub risk_mean: f64,
    pub risk_stderr: f64,
    pub risk_median: f64,
    /// Lower end of a 95% order-statistic band around the median.
    pub risk_median_lo: f64,
    pub risk_median_hi: f64,
    pub k_min: usize,
    pub k_median: usize,
    pub k_max: usize,
    pub benchmark: OracleReport,
    pub penalty_constant: f64,
}

fn run_parallel<T: Send>(
    workers: usize,
    job: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    if workers == 0 {
        return job();
    }
    let pool = ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    pool.install(job)
}

/// Precomputed ingredients of the adaptive per-replication pipeline: scan
/// thresholds, the weight table over the largest possible data cap, and
/// the projection tails for every selectable dimension.
struct AdaptivePre {
    wt: WeightTable,
    n_range: usize,
    n_trunc: bool,
    /// `ln` of the running maximum of the norm weights, index `j - 1`.
    wplus_ln: Vec<f64>,
    log_thr_n: f64,
    m_range: usize,
    m_full: usize,
    log_thr_m: f64,
    /// `suffix[k] = sum_{l > k} omega_l f_l^2` for every selectable `k`.
    suffix: Vec<f64>,
    penalty_constant: f64,
    nu: f64,
}

fn adaptive_pre(
    instance: &ProblemInstance,
    noise: NoiseLevels,
    penalty_constant: f64,
) -> Result<AdaptivePre> {
    let omega = &instance.params.omega;
    let nu = noise.nu();
    let eps = noise.eps();
    let nc = n_circ(nu, omega, Some(instance.len()))?;
    let n_range = nc.value;
    let mut wplus_ln = Vec::with_capacity(n_range);
    let mut wplus = 0.0f64;
    for j in 1..=n_range {
        wplus = wplus.max(omega.eval(j)?);
        wplus_ln.push(wplus.ln());
    }
    let m_full = floor_recip(eps);
    let m_range = m_full.min(instance.len()).min(SCAN_HARD_CAP);
    let k_cap = n_range.min(m_range).max(1);
    let wt = omega.table(k_cap)?;

    let mut suffix = vec![0.0; k_cap + 1];
    let mut acc = 0.0;
    for l in (k_cap + 1..=instance.len()).rev() {
        let f = instance.coeffs[l - 1];
        acc += omega.eval(l)? * f * f;
    }
    suffix[k_cap] = acc;
    for k in (0..k_cap).rev() {
        let f = instance.coeffs[k];
        suffix[k] = suffix[k + 1] + wt.value(k + 1) * f * f;
    }

    Ok(AdaptivePre {
        wt,
        n_range,
        n_trunc: nc.truncated,
        wplus_ln,
        log_thr_n: (nu * nu.ln().abs()).ln(),
        m_range,
        m_full,
        log_thr_m: (1.0 - v_eps(eps)) * eps.ln(),
        suffix,
        penalty_constant,
        nu,
    })
}

/// Data-driven dimension cap computed against lazily materialised
/// observations, generating only the coordinates the scans actually
/// visit. Reproduces `dimension_bounds` on the observed sequence exactly.
fn lazy_cap(lazy: &mut LazyObservations, pre: &AdaptivePre) -> (usize, bool) {
    let mut n_val = pre.n_range.max(1);
    let mut n_trunc = pre.n_trunc;
    for j in 2..=pre.n_range {
        let x = lazy.x(j);
        let lhs = 2.0 * x.abs().ln() - (j as f64).ln() - pre.wplus_ln[j - 1];
        if lhs <= pre.log_thr_n {
            n_val = j - 1;
            n_trunc = false;
            break;
        }
    }
    let mut m_val = pre.m_range.max(1);
    let mut m_trunc = pre.m_range < pre.m_full;
    for j in 2..=pre.m_range {
        let x = lazy.x(j);
        if 2.0 * x.abs().ln() <= pre.log_thr_m {
            m_val = j - 1;
            m_trunc = false;
            break;
        }
    }
    (n_val.min(m_val), n_trunc || m_trunc)
}

fn adaptive_replication(
    instance: &ProblemInstance,
    noise: NoiseLevels,
    seed: u64,
    rep: u64,
    pre: &AdaptivePre,
) -> Result<(f64, usize)> {
    let mut lazy = LazyObservations::new(instance, noise, seed, rep);
    let (cap, _) = lazy_cap(&mut lazy, pre);
    let obs = lazy.materialize(cap);
    let full = estimate(&obs, cap, &instance.params.omega)?;
    let pens = penalty_table(
        &AlphaSeq::Observed(&obs.x),
        &pre.wt,
        pre.nu,
        cap,
        pre.penalty_constant,
        AlphaTag::Observed,
    )?;
    let trace = contrast_and_select(&full, &pens.pen)?;
    let k_hat = trace.k_hat;
    let mut err = 0.0;
    for j in 1..=k_hat {
        let d = full.coeffs[j - 1] - instance.coeffs[j - 1];
        err += pre.wt.value(j) * d * d;
    }
    Ok((err + pre.suffix[k_hat], k_hat))
}

/// Estimates the risk `E ||f_hat - f||^2_omega` by Monte Carlo, together
/// with the distribution of the selected dimension and the benchmark
/// quantities of the configuration.
pub fn mc_risk(cfg: &McConfig) -> Result<RiskReport> {
    if cfg.replications == 0 {
        return Err(Error::InvalidParameter {
            name: "replications",
            value: 0.0,
            constraint: "at least 1",
        });
    }
    if cfg.instance.is_empty() {
        return Err(Error::InvalidParameter {
            name: "instance length",
            value: 0.0,
            constraint: "at least one coordinate",
        });
    }
    if !(cfg.penalty_constant > 0.0) {
        return Err(Error::InvalidParameter {
            name: "penalty_constant",
            value: cfg.penalty_constant,
            constraint: "penalty_constant > 0",
        });
    }
    let instance = cfg.instance;
    let nu = cfg.noise.nu();
    let eps = cfg.noise.eps();
    let benchmark = oracle_report(&instance.params, nu, eps, instance.len())?;
    let seed = cfg.base_seed;
    let noise = cfg.noise;
    let reps = cfg.replications as u64;

    let samples: Vec<(f64, usize)> = match cfg.mode {
        EstimationMode::OracleKStar => {
            let k_star = benchmark.k_star;
            run_parallel(cfg.workers, || {
                (0..reps)
                    .into_par_iter()
                    .map(|rep| {
                        let obs = simulate_prefix(instance, noise, seed, rep, k_star)?;
                        let est = estimate(&obs, k_star, &instance.params.omega)?;
                        let risk = risk_error_sq(&est, instance, &instance.params.omega)?;
                        Ok((risk, k_star))
                    })
                    .collect()
            })?
        }
        EstimationMode::Adaptive => {
            let pre = adaptive_pre(instance, noise, cfg.penalty_constant)?;
            run_parallel(cfg.workers, || {
                (0..reps)
                    .into_par_iter()
                    .map(|rep| adaptive_replication(instance, noise, seed, rep, &pre))
                    .collect()
            })?
        }
    };

    let risks: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let mut ks: Vec<usize> = samples.iter().map(|s| s.1).collect();
    let (risk_mean, risk_stderr) = mean_and_se(&risks);
    let (risk_median, risk_median_lo, risk_median_hi) = median_band(&risks);
    ks.sort_unstable();
    Ok(RiskReport {
        nu,
        eps,
        mode: cfg.mode,
        replications: cfg.replications,
        risk_mean,
        risk_stderr,
        risk_median,
        risk_median_lo,
        risk_median_hi,
        k_min: ks[0],
        k_median: ks[(ks.len() - 1) / 2],
        k_max: ks[ks.len() - 1],
        benchmark,
        penalty_constant: cfg.penalty_constant,
    })
}

/// Comparison of the empirical oracle-dimension risk against the explicit
/// constant-times-benchmark bound.
#[derive(Debug, Clone)]
pub struct MinimaxOutcome {
    pub report: RiskReport,
    /// `4 (6 d + r) max(psi_nu, upsilon_eps)`.
    pub bound: f64,
    /// `bound - (mean - 3 se)`; non-negative when the bound holds.
    pub slack: f64,
    pub pass: bool,
}

/// Verifies the explicit upper bound on the risk of the estimator
/// truncated at the oracle dimension. The estimation mode of `cfg` is
/// ignored; the oracle dimension is always used.
pub fn check_minimax_bound(cfg: &McConfig) -> Result<MinimaxOutcome> {
    let forced = McConfig {
        mode: EstimationMode::OracleKStar,
        ..*cfg
    };
    let report = mc_risk(&forced)?;
    let p = &cfg.instance.params;
    let bound = 4.0 * (6.0 * p.d + p.r) * report.benchmark.psi_nu.max(report.benchmark.upsilon_eps);
    let adjusted = report.risk_mean - 3.0 * report.risk_stderr;
    Ok(MinimaxOutcome {
        bound,
        slack: bound - adjusted,
        pass: adjusted <= bound,
        report,
    })
}

/// Regressor of a log-log rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateRegressor {
    /// `x = ln(noise)`: recovers polynomial rate exponents.
    LogNoise,
    /// `x = ln |ln(noise)|`: recovers logarithmic rate exponents.
    LogAbsLogNoise,
}

/// One grid point of a rate study.
#[derive(Debug, Clone, Copy)]
pub struct RatePoint {
    pub noise: f64,
    pub risk: f64,
}

/// Least-squares line through the transformed points.
#[derive(Debug, Clone)]
pub struct RateFit {
    /// Transformed `(x, y)` pairs actually regressed.
    pub xy: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub expected_slope: Option<f64>,
}

/// Fits `ln(risk) = intercept + slope * x` by ordinary least squares.
pub fn rate_fit(
    points: &[RatePoint],
    regressor: RateRegressor,
    expected_slope: Option<f64>,
) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::NotEnoughPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let mut xy = Vec::with_capacity(points.len());
    for (i, pt) in points.iter().enumerate() {
        if !(pt.noise > 0.0 && pt.noise < 1.0) {
            return Err(Error::InvalidParameter {
                name: "noise",
                value: pt.noise,
                constraint: "0 < noise < 1",
            });
        }
        if !(pt.risk > 0.0) {
            return Err(Error::NonPositiveRisk { index: i });
        }
        let x = match regressor {
            RateRegressor::LogNoise => pt.noise.ln(),
            RateRegressor::LogAbsLogNoise => pt.noise.ln().abs().ln(),
        };
        xy.push((x, pt.risk.ln()));
    }
    let n = xy.len() as f64;
    let xbar = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let ybar = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in &xy {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (y - ybar);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter {
            name: "regressor spread",
            value: 0.0,
            constraint: "at least two distinct noise levels",
        });
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let mut rss = 0.0;
    for &(x, y) in &xy {
        let r = y - intercept - slope * x;
        rss += r * r;
    }
    Ok(RateFit {
        residual_rms: (rss / n).sqrt(),
        xy,
        slope,
        intercept,
        expected_slope,
    })
}

/// Empirical moments of one observed eigenvalue against their explicit
/// bounds.
#[derive(Debug, Clone, Copy)]
pub struct MomentBoundRow {
    pub j: usize,
    pub eps: f64,
    pub a: f64,
    /// `E[(a/X - 1)^2 1{X^2 >= eps}]` and its bound `min(1, 8 eps / a^2)`.
    pub recentred_sq_mean: f64,
    pub recentred_sq_se: f64,
    pub recentred_sq_bound: f64,
    /// `P[X^2 < eps]` and its bound `min(1, 4 eps / a^2)`.
    pub threshold_freq: f64,
    pub threshold_se: f64,
    pub threshold_bound: f64,
    /// `E[(a/X)^2 1{X^2 >= eps}]` and its constant bound 4.
    pub ratio_sq_mean: f64,
    pub ratio_sq_se: f64,
    pub pass: bool,
}

/// Rows plus a one-line summary of the moment bound check.
#[derive(Debug, Clone)]
pub struct MomentBoundReport {
    pub rows: Vec<MomentBoundRow>,
    pub summary: CheckReport,
}

pub const RATIO_SQ_BOUND: f64 = 4.0;

/// Verifies the three moment bounds of the thresholded eigenvalue ratio
/// by direct simulation of `X = a + sqrt(eps) eta`. The noise draws are
/// made once per `(replication, coordinate)` and reused across the `eps`
/// grid, so grid points differ only through the noise level.
pub fn check_ratio_moment_bounds(
    instance: &ProblemInstance,
    coords: &[usize],
    eps_grid: &[f64],
    replications: usize,
    base_seed: u64,
) -> Result<MomentBoundReport> {
    if coords.is_empty() || eps_grid.is_empty() {
        return Err(Error::NotEnoughPoints {
            needed: 1,
            got: 0,
        });
    }
    if replications < 2 {
        return Err(Error::InvalidParameter {
            name: "replications",
            value: replications as f64,
            constraint: "at least 2",
        });
    }
    let mut rows = Vec::with_capacity(coords.len() * eps_grid.len());
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for &j in coords {
        if j == 0 || j > instance.len() {
            return Err(Error::DimensionOutOfRange {
                k: j,
                max: instance.len(),
            });
        }
        let a = instance.eigenvalues[j - 1];
        let etas: Vec<f64> = (0..replications as u64)
            .map(|rep| crate::model::eta_draw(base_seed, rep, j))
            .collect();
        for &eps in eps_grid {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidParameter {
                    name: "eps",
                    value: eps,
                    constraint: "0 < eps < 1",
                });
            }
            let sq_eps = eps.sqrt();
            let mut recentred = Vec::with_capacity(replications);
            let mut thresholded = Vec::with_capacity(replications);
            let mut ratio = Vec::with_capacity(replications);
            for &eta in &etas {
                let x = a + sq_eps * eta;
                if x * x >= eps {
                    let q = a / x;
                    recentred.push((q - 1.0) * (q - 1.0));
                    thresholded.push(0.0);
                    ratio.push(q * q);
                } else {
                    recentred.push(0.0);
                    thresholded.push(1.0);
                    ratio.push(0.0);
                }
            }
            let (m1, se1) = mean_and_se(&recentred);
            let (m2, se2) = mean_and_se(&thresholded);
            let (m3, se3) = mean_and_se(&ratio);
            let b1 = (8.0 * eps / (a * a)).min(1.0);
            let b2 = (4.0 * eps / (a * a)).min(1.0);
            let margins = [
                m1 - b1 - 3.0 * se1,
                m2 - b2 - 3.0 * se2,
                m3 - RATIO_SQ_BOUND - 3.0 * se3,
            ];
            let pass = margins.iter().all(|&m| m <= 0.0);
            if !pass {
                violations += 1;
            }
            for &m in &margins {
                worst = worst.max(m);
            }
            rows.push(MomentBoundRow {
                j,
                eps,
                a,
                recentred_sq_mean: m1,
                recentred_sq_se: se1,
                recentred_sq_bound: b1,
                threshold_freq: m2,
                threshold_se: se2,
                threshold_bound: b2,
                ratio_sq_mean: m3,
                ratio_sq_se: se3,
                pass,
            });
        }
    }
    let trials = rows.len();
    Ok(MomentBoundReport {
        rows,
        summary: CheckReport {
            check: "moments",
            trials,
            violations,
            worst_margin: worst,
            notes: format!(
                "{} coordinates x {} noise levels, {} replications",
                coords.len(),
                eps_grid.len(),
                replications
            ),
        },
    })
}

/// One grid point of the penalty scale check.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyScaleRow {
    pub nu: f64,
    /// Upper truncation bound computed on the class envelope.
    pub n_plus: usize,
    /// `nu * delta` evaluated on the true eigenvalues at `n_plus`.
    pub nu_delta: f64,
    /// `32 d^2`.
    pub bound: f64,
    pub pass: bool,
}

/// Rows plus a one-line summary of the penalty scale check.
#[derive(Debug, Clone)]
pub struct PenaltyScaleReport {
    pub rows: Vec<PenaltyScaleRow>,
    pub summary: CheckReport,
}

/// Verifies that the reference penalty stays bounded at the upper
/// truncation bound: `nu * delta_{N+} <= 32 d^2` with `delta` on the true
/// eigenvalues and `N+` computed on the upper class envelope
/// `sqrt(4 d b)`.
pub fn check_penalty_scale_bound(
    instance: &ProblemInstance,
    nu_grid: &[f64],
) -> Result<PenaltyScaleReport> {
    if nu_grid.is_empty() {
        return Err(Error::NotEnoughPoints { needed: 1, got: 0 });
    }
    let params = &instance.params;
    let omega = &params.omega;
    let upper = AlphaSeq::ScaledWeights {
        weights: &params.b,
        scale: 4.0 * params.d,
    };
    let bound = 32.0 * params.d * params.d;
    let mut rows = Vec::with_capacity(nu_grid.len());
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut clamped = false;
    for &nu in nu_grid {
        let nc = n_circ(nu, omega, None)?;
        let n_plus = n_bound(nu, omega, &upper, nc)?.value;
        let avail = n_plus.min(instance.len());
        clamped |= avail < n_plus;
        let wt = omega.table(avail)?;
        let (_, small) = crate::adaptive::delta(
            avail,
            &AlphaSeq::LogSq(&instance.log_eigenvalues_sq),
            &wt,
        )?;
        let nu_delta = nu * small;
        let margin = nu_delta - bound;
        worst = worst.max(margin);
        let pass = margin <= 0.0;
        if !pass {
            violations += 1;
        }
        rows.push(PenaltyScaleRow {
            nu,
            n_plus,
            nu_delta,
            bound,
            pass,
        });
    }
    let notes = if clamped {
        "some bounds were clamped to the instance range, weakening the check".to_string()
    } else {
        format!("{} noise levels", nu_grid.len())
    };
    let trials = rows.len();
    Ok(PenaltyScaleReport {
        rows,
        summary: CheckReport {
            check: "penalty-scale",
            trials,
            violations,
            worst_margin: worst,
            notes,
        },
    })
}

/// Complement frequencies of the three comparison events at one noise
/// level (`nu = eps`).
#[derive(Debug, Clone, Copy)]
pub struct EventFrequencies {
    pub eps: f64,
    pub omega_eps_c: f64,
    pub omega_tilde_c: f64,
    pub mho_c: f64,
    pub omega_eps_se: f64,
    pub omega_tilde_se: f64,
    pub mho_se: f64,
    /// `max(omega complements) / eps^2`, the implied constant of a
    /// quadratic decay.
    pub omega_const: f64,
    /// `mho complement / eps^6`, the implied constant of a sixth-power
    /// decay.
    pub mho_const: f64,
}

/// Frequencies along a noise grid together with a trend verdict.
#[derive(Debug, Clone)]
pub struct EventScanReport {
    /// Rows sorted by decreasing noise level.
    pub rows: Vec<EventFrequencies>,
    pub replications: usize,
    /// True when every complement frequency is non-increasing as the
    /// noise shrinks, allowing overlap of two standard errors.
    pub monotone: bool,
    pub summary: CheckReport,
}

/// Estimates the complement probabilities of the three comparison events
/// along an `eps` grid with `nu = eps`, using common noise draws across
/// grid points. The instance must be long enough to cover the event
/// ranges and the defining-set scans.
pub fn event_probability_scan(
    instance: &ProblemInstance,
    eps_grid: &[f64],
    replications: usize,
    base_seed: u64,
) -> Result<EventScanReport> {
    if eps_grid.is_empty() {
        return Err(Error::NotEnoughPoints { needed: 1, got: 0 });
    }
    if replications < 2 {
        return Err(Error::InvalidParameter {
            name: "replications",
            value: replications as f64,
            constraint: "at least 2",
        });
    }
    let omega = &instance.params.omega;
    let mut grid: Vec<f64> = eps_grid.to_vec();
    grid.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::with_capacity(grid.len());
    for &eps in &grid {
        let noise = NoiseLevels::new(eps, eps)?;
        let ctx = event_context(instance, eps, eps, omega)?;
        let pre = adaptive_pre(instance, noise, crate::adaptive::DEFAULT_PENALTY_CONSTANT)?;
        let len_needed = (ctx.m_plus + 1)
            .max(ctx.k_plus_avail)
            .min(instance.len())
            .max(1);
        let mut c_eps = 0usize;
        let mut c_tilde = 0usize;
        let mut c_mho = 0usize;
        for rep in 0..replications as u64 {
            let mut lazy = LazyObservations::new(instance, noise, base_seed, rep);
            let (cap, _) = lazy_cap(&mut lazy, &pre);
            let obs = lazy.materialize(len_needed);
            let flags = event_flags_given_cap(&obs, instance, &ctx, cap)?;
            c_eps += usize::from(!flags.omega_eps);
            c_tilde += usize::from(!flags.omega_tilde);
            c_mho += usize::from(!flags.mho);
        }
        let n = replications as f64;
        let freq_se = |c: usize| {
            let f = c as f64 / n;
            (f, (f * (1.0 - f) / n).sqrt())
        };
        let (f_eps, se_eps) = freq_se(c_eps);
        let (f_tilde, se_tilde) = freq_se(c_tilde);
        let (f_mho, se_mho) = freq_se(c_mho);
        rows.push(EventFrequencies {
            eps,
            omega_eps_c: f_eps,
            omega_tilde_c: f_tilde,
            mho_c: f_mho,
            omega_eps_se: se_eps,
            omega_tilde_se: se_tilde,
            mho_se: se_mho,
            omega_const: f_eps.max(f_tilde) / (eps * eps),
            mho_const: f_mho / eps.powi(6),
        });
    }

    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for w in rows.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let pairs = [
            (next.omega_eps_c, next.omega_eps_se, prev.omega_eps_c, prev.omega_eps_se),
            (
                next.omega_tilde_c,
                next.omega_tilde_se,
                prev.omega_tilde_c,
                prev.omega_tilde_se,
            ),
            (next.mho_c, next.mho_se, prev.mho_c, prev.mho_se),
        ];
        for (f_next, se_next, f_prev, se_prev) in pairs {
            let gap = (f_next - 2.0 * se_next) - (f_prev + 2.0 * se_prev);
            worst = worst.max(gap);
            if gap > 0.0 {
                violations += 1;
            }
        }
    }
    let monotone = violations == 0;
    let trials = rows.len();
    Ok(EventScanReport {
        rows,
        replications,
        monotone,
        summary: CheckReport {
            check: "events",
            trials,
            violations,
            worst_margin: worst,
            notes: format!("complement trend across {} levels, nu = eps", grid.len()),
        },
    })
}

/// Runs the full data-driven pipeline repeatedly and asserts the
/// selection bound and the dimension bracket on every realization.
pub fn check_adaptive_selection(
    instance: &ProblemInstance,
    noise: NoiseLevels,
    replications: usize,
    base_seed: u64,
    penalty_constant: f64,
) -> Result<CheckReport> {
    if replications == 0 {
        return Err(Error::InvalidParameter {
            name: "replications",
            value: 0.0,
            constraint: "at least 1",
        });
    }
    let omega = &instance.params.omega;
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut k_lo = usize::MAX;
    let mut k_hi = 0usize;
    for rep in 0..replications as u64 {
        let obs = simulate(instance, noise, base_seed, rep);
        let fit = adaptive_estimate(&obs, omega, penalty_constant)?;
        let out = check_oracle_inequality(
            &fit.full,
            fit.trace.k_hat,
            &fit.penalties.pen,
            instance,
            omega,
        )?;
        worst = worst.max(out.rel_margin);
        if !out.pass {
            violations += 1;
        }
        if fit.trace.k_hat < 1 || fit.trace.k_hat > fit.bounds.k {
            violations += 1;
        }
        k_lo = k_lo.min(fit.trace.k_hat);
        k_hi = k_hi.max(fit.trace.k_hat);
    }
    Ok(CheckReport {
        check: "oracle-inequality",
        trials: replications,
        violations,
        worst_margin: worst,
        notes: format!("selected dimensions in [{k_lo}, {k_hi}]"),
    })
}
