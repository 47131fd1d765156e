//! Minimax benchmark quantities: the oracle dimension, the attainable
//! rates, and their closed-form exponents for the standard families.
//!
//! The central object is `rho_k = max(omega_k / s_k, nu * sum_{j <= k}
//! omega_j / b_j)`, a bias/variance trade-off across truncation dimensions.
//! Its minimum `psi_nu` (attained at the oracle dimension `k*`) benchmarks
//! the `Y`-channel, while `upsilon_eps = max_k (omega_k / s_k) min(1,
//! eps / b_k)` benchmarks the damage done by estimating the eigenvalues.
//! Both scans exploit monotonicity for early exit: the sum inside `rho`
//! only grows, and `omega/s` only shrinks, so once the monotone part alone
//! passes the incumbent the scan cannot improve and stops.

use crate::adaptive::{dimension_bounds, AlphaSeq};
use crate::model::{ClassParams, RateFamily};
use crate::weights::WeightSequence;
use crate::{Error, Result};

/// Upper limit for benchmark scans when no tighter cap applies.
pub const DEFAULT_SCAN_CAP: usize = 1_000_000;

/// Result of minimising `rho_k` over truncation dimensions.
#[derive(Debug, Clone)]
pub struct OracleSearch {
    /// Smallest minimiser of `rho_k`.
    pub k_star: usize,
    /// The attained minimum.
    pub psi_nu: f64,
    /// `rho_k` for every scanned dimension, starting at `k = 1`.
    pub rho: Vec<f64>,
    /// True when the scan hit `k_max` before the early-exit guard fired,
    /// so a later dimension could in principle still improve.
    pub cap_limited: bool,
}

/// Result of maximising the eigenvalue-damage term over dimensions.
#[derive(Debug, Clone, Copy)]
pub struct UpsilonResult {
    pub value: f64,
    /// Smallest maximiser.
    pub argmax: usize,
    pub cap_limited: bool,
}

fn check_level(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v,
            constraint: "inside (0, 1)",
        })
    }
}

/// `rho_k` for a single dimension. The sum runs in log scale per term, so
/// severely decaying `b` saturates to infinity instead of producing NaN.
pub fn rho(
    k: usize,
    nu: f64,
    omega: &WeightSequence,
    s: &WeightSequence,
    b: &WeightSequence,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::IndexZero);
    }
    check_level("nu", nu)?;
    let log_nu = nu.ln();
    let mut sum = 0.0;
    for j in 1..=k {
        sum += (log_nu + omega.log_eval(j)? - b.log_eval(j)?).exp();
    }
    let ratio = (omega.log_eval(k)? - s.log_eval(k)?).exp();
    Ok(ratio.max(sum))
}

/// Minimises `rho_k` over `1..=k_max`, returning the smallest minimiser.
pub fn oracle_k(
    nu: f64,
    omega: &WeightSequence,
    s: &WeightSequence,
    b: &WeightSequence,
    k_max: usize,
) -> Result<OracleSearch> {
    check_level("nu", nu)?;
    if k_max == 0 {
        return Err(Error::IndexZero);
    }
    let log_nu = nu.ln();
    let mut rho_table = Vec::new();
    let mut sum = 0.0;
    let mut best = f64::INFINITY;
    let mut k_star = 1;
    for k in 1..=k_max {
        sum += (log_nu + omega.log_eval(k)? - b.log_eval(k)?).exp();
        let ratio = (omega.log_eval(k)? - s.log_eval(k)?).exp();
        let rho_k = ratio.max(sum);
        rho_table.push(rho_k);
        if rho_k < best {
            best = rho_k;
            k_star = k;
        }
        // The sum is non-decreasing in k and bounds every later rho from
        // below, so nothing past this point can beat the incumbent.
        if sum >= best {
            return Ok(OracleSearch {
                k_star,
                psi_nu: best,
                rho: rho_table,
                cap_limited: false,
            });
        }
    }
    Ok(OracleSearch {
        k_star,
        psi_nu: best,
        rho: rho_table,
        cap_limited: true,
    })
}

/// Maximises `(omega_k / s_k) min(1, eps / b_k)` over `1..=k_max`,
/// returning the smallest maximiser.
pub fn upsilon(
    eps: f64,
    omega: &WeightSequence,
    s: &WeightSequence,
    b: &WeightSequence,
    k_max: usize,
) -> Result<UpsilonResult> {
    check_level("eps", eps)?;
    if k_max == 0 {
        return Err(Error::IndexZero);
    }
    let log_eps = eps.ln();
    let mut best = f64::NEG_INFINITY;
    let mut argmax = 1;
    for k in 1..=k_max {
        let log_ratio = omega.log_eval(k)? - s.log_eval(k)?;
        let term = (log_ratio + (log_eps - b.log_eval(k)?).min(0.0)).exp();
        if term > best {
            best = term;
            argmax = k;
        }
        // omega/s is non-increasing for admissible weights and bounds
        // every later term from above.
        if log_ratio.exp() <= best {
            return Ok(UpsilonResult {
                value: best,
                argmax,
                cap_limited: false,
            });
        }
    }
    Ok(UpsilonResult {
        value: best,
        argmax,
        cap_limited: true,
    })
}

/// Ratio in (0, 1] measuring how balanced the two `rho` terms are at the
/// oracle dimension: `min(term_bias, term_variance) / psi_nu`.
pub fn eta_diagnostic(
    nu: f64,
    omega: &WeightSequence,
    s: &WeightSequence,
    b: &WeightSequence,
    k_max: usize,
) -> Result<f64> {
    let search = oracle_k(nu, omega, s, b, k_max)?;
    let k = search.k_star;
    let log_nu = nu.ln();
    let mut sum = 0.0;
    for j in 1..=k {
        sum += (log_nu + omega.log_eval(j)? - b.log_eval(j)?).exp();
    }
    let ratio = (omega.log_eval(k)? - s.log_eval(k)?).exp();
    Ok(ratio.min(sum) / search.psi_nu)
}

/// Benchmark rate of the data-driven procedure:
/// `min_{k <= k_minus} max(omega_k / s_k, nu * delta_k)` with `delta`
/// evaluated on the class sequence `sqrt(b)`.
pub fn psi_diamond(
    nu: f64,
    omega: &WeightSequence,
    s: &WeightSequence,
    b: &WeightSequence,
    k_minus: usize,
) -> Result<f64> {
    check_level("nu", nu)?;
    if k_minus == 0 {
        return Err(Error::IndexZero);
    }
    let mut best = f64::INFINITY;
    let mut log_dmax = f64::NEG_INFINITY;
    for k in 1..=k_minus {
        // alpha_j^2 = b_j, so the log ratio is omega over b directly.
        log_dmax = log_dmax.max(omega.log_eval(k)? - b.log_eval(k)?);
        let (_, small) = crate::adaptive::delta_from_log(k, log_dmax);
        let ratio = (omega.log_eval(k)? - s.log_eval(k)?).exp();
        best = best.min(ratio.max(nu * small));
    }
    Ok(best)
}

/// Closed-form benchmark rate for the standard families.
///
/// Mild decay: `max(nu^(2(p-s)/(2p+2b+1)), eps^(min(p-s,b)/b))`. Severe
/// decay: `max(|ln nu|, |ln eps|)` terms with exponent `-(p-s)/b`; the
/// exponent is negative because a rate must vanish as the noise levels
/// shrink, only logarithmically slowly here.
pub fn theoretical_rate(
    family: RateFamily,
    p: f64,
    b: f64,
    s: f64,
    nu: f64,
    eps: f64,
) -> Result<f64> {
    if !(p > 0.5) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            constraint: "p > 1/2",
        });
    }
    if !(b > 0.0) {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            constraint: "b > 0",
        });
    }
    if !(s >= 0.0 && s <= p) {
        return Err(Error::InvalidParameter {
            name: "s",
            value: s,
            constraint: "0 <= s <= p",
        });
    }
    check_level("nu", nu)?;
    check_level("eps", eps)?;
    match family {
        RateFamily::Mild => {
            let q_nu = 2.0 * (p - s) / (2.0 * p + 2.0 * b + 1.0);
            let q_eps = (p - s).min(b) / b;
            Ok(nu.powf(q_nu).max(eps.powf(q_eps)))
        }
        RateFamily::Severe => {
            let q = -(p - s) / b;
            Ok(nu.ln().abs().powf(q).max(eps.ln().abs().powf(q)))
        }
    }
}

/// All benchmark quantities for one `(class, nu, eps)` configuration.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub nu: f64,
    pub eps: f64,
    pub k_star: usize,
    pub psi_nu: f64,
    pub upsilon_eps: f64,
    pub upsilon_argmax: usize,
    pub eta: f64,
    /// Deterministic lower truncation bound used by `psi_diamond`.
    pub k_minus: usize,
    pub psi_diamond: f64,
    /// Noise exponent of the closed-form rate when the standard families
    /// are used: `2(p-s)/(2p+2b+1)` for mild decay, `-(p-s)/b` (on the
    /// log of the noise level) for severe decay.
    pub theoretical_exponent: Option<f64>,
    pub theoretical_rate: Option<f64>,
    pub cap_limited: bool,
}

/// Computes the full benchmark report for one configuration.
pub fn oracle_report(
    params: &ClassParams,
    nu: f64,
    eps: f64,
    k_max: usize,
) -> Result<OracleReport> {
    let search = oracle_k(nu, &params.omega, &params.s, &params.b, k_max)?;
    let ups = upsilon(eps, &params.omega, &params.s, &params.b, k_max)?;
    let eta = eta_diagnostic(nu, &params.omega, &params.s, &params.b, k_max)?;

    let lower = AlphaSeq::ScaledWeights {
        weights: &params.b,
        scale: 1.0 / (4.0 * params.d),
    };
    let bounds = dimension_bounds(nu, eps, &params.omega, &lower, None)?;
    let psi_d = psi_diamond(nu, &params.omega, &params.s, &params.b, bounds.k)?;

    let (theoretical_exponent, rate) = match params.exponents {
        Some(e) => {
            let expo = match e.family {
                RateFamily::Mild => 2.0 * (e.p - e.s) / (2.0 * e.p + 2.0 * e.b + 1.0),
                RateFamily::Severe => -(e.p - e.s) / e.b,
            };
            (
                Some(expo),
                Some(theoretical_rate(e.family, e.p, e.b, e.s, nu, eps)?),
            )
        }
        None => (None, None),
    };

    Ok(OracleReport {
        nu,
        eps,
        k_star: search.k_star,
        psi_nu: search.psi_nu,
        upsilon_eps: ups.value,
        upsilon_argmax: ups.argmax,
        eta,
        k_minus: bounds.k,
        psi_diamond: psi_d,
        theoretical_exponent,
        theoretical_rate: rate,
        cap_limited: search.cap_limited || ups.cap_limited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightSequence;

    fn mild() -> (WeightSequence, WeightSequence, WeightSequence) {
        (
            WeightSequence::Constant,
            WeightSequence::Sobolev { p: 1.0 },
            WeightSequence::PolyDecay { b: 1.0 },
        )
    }

    fn severe() -> (WeightSequence, WeightSequence, WeightSequence) {
        (
            WeightSequence::Constant,
            WeightSequence::Sobolev { p: 1.0 },
            WeightSequence::ExpDecay { b: 1.0 },
        )
    }

    #[test]
    fn rho_matches_hand_computation() {
        let (w, s, b) = mild();
        // nu = 1e-4, k = 8: sum of nu j^2 over j <= 8 is 204e-4 = 0.0204,
        // the ratio term is 1/64.
        let v = rho(8, 1e-4, &w, &s, &b).unwrap();
        assert!((v - 0.0204).abs() < 1e-15, "{v}");
        // k = 7: ratio 1/49 dominates the sum 0.0140.
        let v = rho(7, 1e-4, &w, &s, &b).unwrap();
        assert!((v - 1.0 / 49.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_balances_bias_and_variance_in_the_mild_case() {
        let (w, s, b) = mild();
        let res = oracle_k(1e-4, &w, &s, &b, 1_000_000).unwrap();
        assert_eq!(res.k_star, 8);
        assert!((res.psi_nu - 0.0204).abs() < 1e-15);
        assert!(!res.cap_limited);
        // Smaller noise pushes the oracle dimension up.
        let res = oracle_k(1e-5, &w, &s, &b, 1_000_000).unwrap();
        assert_eq!(res.k_star, 12);
    }

    #[test]
    fn oracle_handles_noise_near_one() {
        let (w, s, b) = mild();
        let res = oracle_k(0.9, &w, &s, &b, 1_000_000).unwrap();
        assert_eq!(res.k_star, 1);
        assert_eq!(res.psi_nu, 1.0);
    }

    #[test]
    fn oracle_dimension_grows_slowly_under_severe_decay() {
        let (w, s, b) = severe();
        assert_eq!(oracle_k(1e-2, &w, &s, &b, 1_000_000).unwrap().k_star, 2);
        assert_eq!(oracle_k(1e-8, &w, &s, &b, 1_000_000).unwrap().k_star, 4);
    }

    #[test]
    fn rho_table_matches_single_evaluations() {
        let (w, s, b) = mild();
        let res = oracle_k(1e-3, &w, &s, &b, 1_000_000).unwrap();
        for (i, &r) in res.rho.iter().enumerate() {
            let single = rho(i + 1, 1e-3, &w, &s, &b).unwrap();
            assert!((r - single).abs() <= 1e-12 * single);
        }
    }

    #[test]
    fn upsilon_matches_hand_computation() {
        let (w, s, b) = mild();
        // eps = 0.01: terms are min(k^-2, 0.01), maximal from k = 1 on.
        let u = upsilon(0.01, &w, &s, &b, 1_000_000).unwrap();
        assert!((u.value - 0.01).abs() < 1e-15);
        assert_eq!(u.argmax, 1);
        assert!(!u.cap_limited);
    }

    #[test]
    fn upsilon_under_severe_decay_peaks_past_the_first_index() {
        let (w, s, b) = severe();
        let u = upsilon(1e-3, &w, &s, &b, 1_000_000).unwrap();
        assert_eq!(u.argmax, 3);
        assert!((u.value - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn flat_ratio_exhausts_the_cap_and_reports_it() {
        // With omega/s constant the early-exit criterion can never prove
        // optimality, so the scan must run to the cap and say so.
        let w = WeightSequence::Constant;
        let s = WeightSequence::Constant;
        let b = WeightSequence::Constant;
        let u = upsilon(1e-3, &w, &s, &b, 100).unwrap();
        assert!(u.cap_limited);
        assert_eq!(u.argmax, 1);
        assert!((u.value - 1e-3).abs() < 1e-18);

        // A decaying ratio lets the scan stop early instead.
        let s2 = WeightSequence::Sobolev { p: 1.0 };
        let u = upsilon(1e-3, &w, &s2, &b, 100).unwrap();
        assert!(!u.cap_limited);
        assert_eq!(u.argmax, 1);
    }

    #[test]
    fn eta_lies_in_unit_interval_and_matches_hand_value() {
        let (w, s, b) = mild();
        let eta = eta_diagnostic(1e-4, &w, &s, &b, 1_000_000).unwrap();
        // min(1/64, 0.0204) / 0.0204.
        assert!((eta - 0.765931372549).abs() < 1e-9, "{eta}");
        for nu in [0.5, 1e-2, 1e-6] {
            let e = eta_diagnostic(nu, &w, &s, &b, 1_000_000).unwrap();
            assert!(e > 0.0 && e <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn theoretical_rates_match_the_closed_forms() {
        // Mild, p=1 b=1 s=0: nu exponent 2/5, eps exponent 1.
        let r = theoretical_rate(RateFamily::Mild, 1.0, 1.0, 0.0, 1e-5, 1e-10).unwrap();
        assert!((r - 1e-2).abs() < 1e-12);
        // Severe, p=1 b=1 s=0: 1/|ln nu|.
        let r = theoretical_rate(RateFamily::Severe, 1.0, 1.0, 0.0, 1e-5, 1e-5).unwrap();
        assert!((r - 1.0 / 1e-5f64.ln().abs()).abs() < 1e-12);
        assert!((r - 0.086858896).abs() < 1e-8);
        // s = p freezes the rate at 1.
        let r = theoretical_rate(RateFamily::Mild, 1.0, 1.0, 1.0, 1e-5, 1e-5).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn theoretical_rate_validates_exponents() {
        assert!(theoretical_rate(RateFamily::Mild, 0.4, 1.0, 0.0, 0.1, 0.1).is_err());
        assert!(theoretical_rate(RateFamily::Mild, 1.0, 0.0, 0.0, 0.1, 0.1).is_err());
        assert!(theoretical_rate(RateFamily::Mild, 1.0, 1.0, 2.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn psi_diamond_stays_above_psi_nu() {
        // The data-driven benchmark can only lose against the oracle.
        let (w, s, b) = mild();
        for nu in [1e-2, 1e-3, 1e-4] {
            let psi = oracle_k(nu, &w, &s, &b, 1_000_000).unwrap().psi_nu;
            let psi_d = psi_diamond(nu, &w, &s, &b, 50).unwrap();
            assert!(psi_d >= psi * (1.0 - 1e-12), "{psi_d} vs {psi}");
        }
    }

    #[test]
    fn full_report_is_consistent() {
        let params = crate::model::ClassParams::mild(1.0, 1.0, 0.0, 1.0, 2.0).unwrap();
        let rep = oracle_report(&params, 1e-4, 1e-4, DEFAULT_SCAN_CAP).unwrap();
        assert_eq!(rep.k_star, 8);
        assert!((rep.psi_nu - 0.0204).abs() < 1e-15);
        assert!(rep.k_minus >= 1);
        assert!(rep.psi_diamond >= rep.psi_nu * (1.0 - 1e-12));
        assert_eq!(rep.theoretical_exponent, Some(0.4));
        assert!(!rep.cap_limited);
    }
}
