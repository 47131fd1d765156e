//! Problem instances, class membership, and observation simulation.
//!
//! # Classes
//!
//! A [`ClassParams`] value bundles the solution radius `r`, the eigenvalue
//! corridor width `d >= 1`, and the three weight sequences. The solution
//! class contains all coefficient sequences with `sum_j s_j f_j^2 <= r`;
//! the eigenvalue class contains all sequences with
//! `1/d <= a_j^2 / b_j <= d` for every `j`. [`make_instance`] places a
//! concrete truth inside both classes, either concentrating the whole
//! solution budget on one coordinate or spreading it, and putting the
//! eigenvalues at the corridor centre or on its upper edge.
//!
//! # Reproducible draws
//!
//! Every standard normal variate is a pure function of
//! `(seed, replication, coordinate, stream)`: the four values key a
//! dedicated ChaCha8 instance that produces exactly one draw. Stream 0
//! carries the noise on `Y`, stream 1 the noise on `X`. Simulating a
//! coordinate therefore gives the same value whether it is generated
//! eagerly, lazily on first use, or from another thread, which is what
//! makes parallel Monte Carlo aggregates byte-reproducible at any worker
//! count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::weights::{WeightSequence, COMPARISON_SLACK};
use crate::{ceil_recip, Error, Result};

const STREAM_Y: u64 = 0;
const STREAM_X: u64 = 1;

fn normal_draw(seed: u64, replication: u64, coord: u64, stream: u64) -> f64 {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replication.to_le_bytes());
    key[16..24].copy_from_slice(&coord.to_le_bytes());
    key[24..].copy_from_slice(&stream.to_le_bytes());
    StandardNormal.sample(&mut ChaCha8Rng::from_seed(key))
}

/// Noise draw for coordinate `j` of the `Y` channel.
pub(crate) fn xi_draw(seed: u64, replication: u64, j: usize) -> f64 {
    normal_draw(seed, replication, j as u64, STREAM_Y)
}

/// Noise draw for coordinate `j` of the `X` channel.
pub(crate) fn eta_draw(seed: u64, replication: u64, j: usize) -> f64 {
    normal_draw(seed, replication, j as u64, STREAM_X)
}

/// Decay regime of the standard eigenvalue families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFamily {
    /// Polynomial eigenvalue decay `b_j = j^(-2b)`.
    Mild,
    /// Exponential eigenvalue decay `b_j = exp(1 - j^(2b))`.
    Severe,
}

/// Exponents of the standard families, kept alongside custom sequences so
/// closed-form rates stay available.
#[derive(Debug, Clone, Copy)]
pub struct RateExponents {
    pub family: RateFamily,
    pub p: f64,
    pub b: f64,
    pub s: f64,
}

/// Class parameters: solution radius, eigenvalue corridor width, and the
/// three weight sequences.
#[derive(Debug, Clone)]
pub struct ClassParams {
    pub r: f64,
    pub d: f64,
    pub omega: WeightSequence,
    pub s: WeightSequence,
    pub b: WeightSequence,
    /// Present when the standard families are used; enables closed-form
    /// benchmark rates.
    pub exponents: Option<RateExponents>,
}

fn check_radius_and_width(r: f64, d: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            constraint: "r > 0",
        });
    }
    if !(d >= 1.0 && d.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "d",
            value: d,
            constraint: "d >= 1",
        });
    }
    Ok(())
}

fn check_exponents(p: f64, b: f64, s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "s",
            value: s,
            constraint: "0 <= s <= p",
        });
    }
    if !(p >= s && p.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            constraint: "p >= s >= 0",
        });
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            constraint: "b > 0",
        });
    }
    Ok(())
}

impl ClassParams {
    /// Standard mildly ill-posed configuration: `s_j = j^(2p)`,
    /// `b_j = j^(-2b)`, error norm weights `j^(2s)`.
    pub fn mild(p: f64, b: f64, s: f64, r: f64, d: f64) -> Result<Self> {
        check_radius_and_width(r, d)?;
        check_exponents(p, b, s)?;
        Ok(Self {
            r,
            d,
            omega: WeightSequence::Norm { s },
            s: WeightSequence::Sobolev { p },
            b: WeightSequence::PolyDecay { b },
            exponents: Some(RateExponents {
                family: RateFamily::Mild,
                p,
                b,
                s,
            }),
        })
    }

    /// Standard severely ill-posed configuration: `s_j = j^(2p)`,
    /// `b_j = exp(1 - j^(2b))`, error norm weights `j^(2s)`.
    pub fn severe(p: f64, b: f64, s: f64, r: f64, d: f64) -> Result<Self> {
        check_radius_and_width(r, d)?;
        check_exponents(p, b, s)?;
        Ok(Self {
            r,
            d,
            omega: WeightSequence::Norm { s },
            s: WeightSequence::Sobolev { p },
            b: WeightSequence::ExpDecay { b },
            exponents: Some(RateExponents {
                family: RateFamily::Severe,
                p,
                b,
                s,
            }),
        })
    }

    /// Fully custom weight triple. Closed-form rates are unavailable.
    pub fn custom(
        omega: WeightSequence,
        s: WeightSequence,
        b: WeightSequence,
        r: f64,
        d: f64,
    ) -> Result<Self> {
        check_radius_and_width(r, d)?;
        Ok(Self {
            r,
            d,
            omega,
            s,
            b,
            exponents: None,
        })
    }
}

/// Placement of the solution coefficients of a test instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    /// The whole class budget on one coordinate: `f_j0 = sqrt(r / s_j0)`,
    /// zero elsewhere. `SpikeAt(1)` is the boundary-single layout.
    SpikeAt(usize),
    /// Coefficients `f_j = c / (j sqrt(s_j))` with `c` chosen so the class
    /// norm equals `r` exactly on the instance range.
    Spread,
}

/// Placement of the eigenvalues of a test instance inside the corridor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenvalueKind {
    /// `a_j = sqrt(b_j)`, the corridor centre.
    MidClass,
    /// `a_j = sqrt(d b_j)`, the upper corridor edge.
    Edge,
}

/// A concrete in-class truth over coordinates `1..=len`.
///
/// Eigenvalues are stored twice: in linear scale for simulation and as
/// `ln(a_j^2)` for order comparisons, because severely decaying spectra
/// leave the linear f64 range after a few dozen coordinates.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub coeffs: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub log_eigenvalues_sq: Vec<f64>,
    pub params: ClassParams,
}

impl ProblemInstance {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Builds a concrete truth inside the classes described by `params`.
pub fn make_instance(
    solution: SolutionKind,
    eigenvalues: EigenvalueKind,
    params: &ClassParams,
    len: usize,
) -> Result<ProblemInstance> {
    if len == 0 {
        return Err(Error::InvalidParameter {
            name: "len",
            value: 0.0,
            constraint: "at least one coordinate",
        });
    }

    let coeffs = match solution {
        SolutionKind::SpikeAt(j0) => {
            if j0 == 0 || j0 > len {
                return Err(Error::DimensionOutOfRange { k: j0, max: len });
            }
            let mut f = vec![0.0; len];
            f[j0 - 1] = (params.r / params.s.eval(j0)?).sqrt();
            f
        }
        SolutionKind::Spread => {
            let mut inv_sq_sum = 0.0;
            for j in 1..=len {
                inv_sq_sum += 1.0 / (j as f64 * j as f64);
            }
            let c = (params.r / inv_sq_sum).sqrt();
            let mut f = Vec::with_capacity(len);
            for j in 1..=len {
                let half_log_s = 0.5 * params.s.log_eval(j)?;
                f.push(c * (-half_log_s).exp() / j as f64);
            }
            f
        }
    };

    let mut eig = Vec::with_capacity(len);
    let mut log_sq = Vec::with_capacity(len);
    let log_scale = match eigenvalues {
        EigenvalueKind::MidClass => 0.0,
        EigenvalueKind::Edge => params.d.ln(),
    };
    for j in 1..=len {
        let l = params.b.log_eval(j)? + log_scale;
        log_sq.push(l);
        eig.push((0.5 * l).exp());
    }

    Ok(ProblemInstance {
        coeffs,
        eigenvalues: eig,
        log_eigenvalues_sq: log_sq,
        params: params.clone(),
    })
}

/// Result of testing a coefficient sequence against the solution class.
#[derive(Debug, Clone, Copy)]
pub struct SolutionMembership {
    pub pass: bool,
    /// The attained class norm `sum_j s_j f_j^2`.
    pub norm: f64,
}

/// Checks `sum_j s_j f_j^2 <= r` with relative slack
/// [`COMPARISON_SLACK`].
pub fn check_solution_membership(
    coeffs: &[f64],
    s: &WeightSequence,
    r: f64,
) -> Result<SolutionMembership> {
    let mut norm = 0.0;
    for (i, f) in coeffs.iter().enumerate() {
        norm += s.eval(i + 1)? * f * f;
    }
    Ok(SolutionMembership {
        pass: norm <= r * (1.0 + COMPARISON_SLACK),
        norm,
    })
}

/// Result of testing an eigenvalue sequence against the corridor.
#[derive(Debug, Clone, Copy)]
pub struct OperatorMembership {
    pub pass: bool,
    /// Largest of `a_j^2 / b_j` and its reciprocal over the range.
    pub worst_ratio: f64,
}

/// Checks `1/d <= a_j^2 / b_j <= d` for every coordinate. The input is
/// `ln(a_j^2)` (as stored on [`ProblemInstance`]) and the comparison runs
/// entirely in log scale, so underflowing spectra never distort it. The
/// slack scales with the magnitude of the logs: a severely decaying
/// spectrum puts them at 1e5 and beyond, where f64 addition already
/// rounds at far more than the bare [`COMPARISON_SLACK`].
pub fn check_operator_membership(
    log_eigenvalues_sq: &[f64],
    b: &WeightSequence,
    d: f64,
) -> Result<OperatorMembership> {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (i, l) in log_eigenvalues_sq.iter().enumerate() {
        let lb = b.log_eval(i + 1)?;
        let gap = (l - lb).abs();
        worst = worst.max(gap);
        if gap > d.ln() + COMPARISON_SLACK * lb.abs().max(1.0) {
            pass = false;
        }
    }
    Ok(OperatorMembership {
        pass,
        worst_ratio: worst.exp(),
    })
}

/// Noise levels of the two observation channels, both restricted to (0,1).
#[derive(Debug, Clone, Copy)]
pub struct NoiseLevels {
    nu: f64,
    eps: f64,
}

impl NoiseLevels {
    pub fn new(nu: f64, eps: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidParameter {
                name: "nu",
                value: nu,
                constraint: "0 < nu < 1",
            });
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: eps,
                constraint: "0 < eps < 1",
            });
        }
        Ok(Self { nu, eps })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Default series truncation: `min(ceil(1/nu), ceil(1/eps), j_cap)`,
/// at least 1.
pub fn truncation_length(noise: NoiseLevels, j_cap: usize) -> usize {
    ceil_recip(noise.nu())
        .min(ceil_recip(noise.eps()))
        .min(j_cap)
        .max(1)
}

/// One simulated realization of the two observation sequences.
///
/// `y` and `x` always have equal length; `seed` and `replication` identify
/// the draws so a set can be re-materialised exactly.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub noise: NoiseLevels,
    pub seed: u64,
    pub replication: u64,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Simulates `Y_j = a_j f_j + sqrt(nu) xi_j` and
/// `X_j = a_j + sqrt(eps) eta_j` for the first `len` coordinates.
pub fn simulate_prefix(
    instance: &ProblemInstance,
    noise: NoiseLevels,
    seed: u64,
    replication: u64,
    len: usize,
) -> Result<ObservationSet> {
    if len > instance.len() {
        return Err(Error::DimensionOutOfRange {
            k: len,
            max: instance.len(),
        });
    }
    let sq_nu = noise.nu().sqrt();
    let sq_eps = noise.eps().sqrt();
    let mut y = Vec::with_capacity(len);
    let mut x = Vec::with_capacity(len);
    for j in 1..=len {
        let a = instance.eigenvalues[j - 1];
        let f = instance.coeffs[j - 1];
        y.push(a * f + sq_nu * xi_draw(seed, replication, j));
        x.push(a + sq_eps * eta_draw(seed, replication, j));
    }
    Ok(ObservationSet {
        y,
        x,
        noise,
        seed,
        replication,
    })
}

/// Simulates both observation sequences over the whole instance range.
pub fn simulate(
    instance: &ProblemInstance,
    noise: NoiseLevels,
    seed: u64,
    replication: u64,
) -> ObservationSet {
    simulate_prefix(instance, noise, seed, replication, instance.len())
        .expect("prefix length equals the instance length")
}

/// Observations materialised coordinate by coordinate on first access,
/// producing exactly the values [`simulate`] would. Used by scanning code
/// whose stopping point is data dependent.
pub(crate) struct LazyObservations<'a> {
    instance: &'a ProblemInstance,
    noise: NoiseLevels,
    seed: u64,
    replication: u64,
    y: Vec<f64>,
    x: Vec<f64>,
}

impl<'a> LazyObservations<'a> {
    pub(crate) fn new(
        instance: &'a ProblemInstance,
        noise: NoiseLevels,
        seed: u64,
        replication: u64,
    ) -> Self {
        Self {
            instance,
            noise,
            seed,
            replication,
            y: Vec::new(),
            x: Vec::new(),
        }
    }

    pub(crate) fn limit(&self) -> usize {
        self.instance.len()
    }

    /// `X_j`, generating any missing prefix. Panics past the instance end.
    pub(crate) fn x(&mut self, j: usize) -> f64 {
        debug_assert!(j >= 1 && j <= self.limit());
        let sq_eps = self.noise.eps().sqrt();
        while self.x.len() < j {
            let i = self.x.len() + 1;
            let a = self.instance.eigenvalues[i - 1];
            self.x.push(a + sq_eps * eta_draw(self.seed, self.replication, i));
        }
        self.x[j - 1]
    }

    /// `Y_j`, generating any missing prefix. Panics past the instance end.
    pub(crate) fn y(&mut self, j: usize) -> f64 {
        debug_assert!(j >= 1 && j <= self.limit());
        let sq_nu = self.noise.nu().sqrt();
        while self.y.len() < j {
            let i = self.y.len() + 1;
            let a = self.instance.eigenvalues[i - 1];
            let f = self.instance.coeffs[i - 1];
            self.y.push(a * f + sq_nu * xi_draw(self.seed, self.replication, i));
        }
        self.y[j - 1]
    }

    /// Completes both channels up to `len` and returns them as an
    /// ordinary observation set.
    pub(crate) fn materialize(mut self, len: usize) -> ObservationSet {
        self.x(len);
        self.y(len);
        self.x.truncate(len);
        self.y.truncate(len);
        ObservationSet {
            y: self.y,
            x: self.x,
            noise: self.noise,
            seed: self.seed,
            replication: self.replication,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mild_params() -> ClassParams {
        ClassParams::mild(1.0, 1.0, 0.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn boundary_single_concentrates_the_budget() {
        let inst = make_instance(
            SolutionKind::SpikeAt(1),
            EigenvalueKind::MidClass,
            &mild_params(),
            5,
        )
        .unwrap();
        assert_eq!(inst.coeffs, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mid_class_eigenvalues_follow_sqrt_b() {
        let inst = make_instance(
            SolutionKind::Spread,
            EigenvalueKind::MidClass,
            &mild_params(),
            3,
        )
        .unwrap();
        let expect = [1.0, 0.5, 1.0 / 3.0];
        for (a, e) in inst.eigenvalues.iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn spread_solution_attains_the_radius_exactly() {
        let inst = make_instance(
            SolutionKind::Spread,
            EigenvalueKind::MidClass,
            &mild_params(),
            3,
        )
        .unwrap();
        // c = 6/7 for r = 1, J = 3 since 1 + 1/4 + 1/9 = 49/36.
        let c = 6.0 / 7.0;
        let expect = [c, c / 4.0, c / 9.0];
        for (f, e) in inst.coeffs.iter().zip(expect) {
            assert!((f - e).abs() < 1e-12, "{f} vs {e}");
        }
        let m = check_solution_membership(&inst.coeffs, &inst.params.s, 1.0).unwrap();
        assert!(m.pass);
        assert!((m.norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn instances_stay_in_class_even_past_linear_underflow() {
        let params = ClassParams::severe(1.0, 1.0, 0.0, 1.0, 2.0).unwrap();
        for kind in [EigenvalueKind::MidClass, EigenvalueKind::Edge] {
            let inst = make_instance(SolutionKind::Spread, kind, &params, 60).unwrap();
            // Linear eigenvalues underflow at the tail, logs do not.
            assert_eq!(inst.eigenvalues[59], 0.0);
            assert!(inst.log_eigenvalues_sq[59].is_finite());
            let m =
                check_operator_membership(&inst.log_eigenvalues_sq, &inst.params.b, 2.0).unwrap();
            assert!(m.pass, "worst ratio {}", m.worst_ratio);
            let s = check_solution_membership(&inst.coeffs, &inst.params.s, 1.0).unwrap();
            assert!(s.pass);
        }
    }

    #[test]
    fn edge_eigenvalues_sit_on_the_corridor_boundary() {
        let inst = make_instance(
            SolutionKind::Spread,
            EigenvalueKind::Edge,
            &mild_params(),
            10,
        )
        .unwrap();
        let m = check_operator_membership(&inst.log_eigenvalues_sq, &inst.params.b, 2.0).unwrap();
        assert!(m.pass);
        assert!((m.worst_ratio - 2.0).abs() < 1e-12);
        // A slightly narrower corridor rejects the same sequence.
        let m = check_operator_membership(&inst.log_eigenvalues_sq, &inst.params.b, 1.99).unwrap();
        assert!(!m.pass);
    }

    #[test]
    fn out_of_class_eigenvalues_are_caught() {
        let m = check_operator_membership(
            &[(4.0f64).ln()],
            &WeightSequence::Constant,
            2.0,
        )
        .unwrap();
        assert!(!m.pass);
        assert!((m.worst_ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn noise_levels_must_lie_in_the_open_unit_interval() {
        assert!(NoiseLevels::new(0.5, 0.1).is_ok());
        assert!(NoiseLevels::new(0.0, 0.1).is_err());
        assert!(NoiseLevels::new(0.1, 1.0).is_err());
    }

    #[test]
    fn truncation_length_takes_the_tightest_bound() {
        let noise = NoiseLevels::new(1e-3, 1e-2).unwrap();
        assert_eq!(truncation_length(noise, 100_000), 100);
        assert_eq!(truncation_length(noise, 50), 50);
        let noise = NoiseLevels::new(0.9, 0.9).unwrap();
        assert_eq!(truncation_length(noise, 100_000), 2);
    }

    #[test]
    fn simulation_is_reproducible_and_channel_separated() {
        let inst = make_instance(
            SolutionKind::Spread,
            EigenvalueKind::MidClass,
            &mild_params(),
            32,
        )
        .unwrap();
        let noise = NoiseLevels::new(1e-2, 1e-2).unwrap();
        let a = simulate(&inst, noise, 7, 3);
        let b = simulate(&inst, noise, 7, 3);
        assert_eq!(a.y, b.y);
        assert_eq!(a.x, b.x);

        // Different replication index changes the draws.
        let c = simulate(&inst, noise, 7, 4);
        assert_ne!(a.y, c.y);

        // The two channels never share noise even at equal coordinates.
        let centred: Vec<f64> = a
            .y
            .iter()
            .zip(&inst.coeffs)
            .zip(&inst.eigenvalues)
            .map(|((y, f), e)| y - e * f)
            .collect();
        let centred_x: Vec<f64> = a
            .x
            .iter()
            .zip(&inst.eigenvalues)
            .map(|(x, e)| x - e)
            .collect();
        assert!(centred
            .iter()
            .zip(&centred_x)
            .all(|(u, v)| (u - v).abs() > 1e-15));
    }

    #[test]
    fn lazy_access_matches_eager_simulation() {
        let inst = make_instance(
            SolutionKind::Spread,
            EigenvalueKind::MidClass,
            &mild_params(),
            64,
        )
        .unwrap();
        let noise = NoiseLevels::new(1e-2, 1e-3).unwrap();
        let eager = simulate(&inst, noise, 11, 5);

        let mut lazy = LazyObservations::new(&inst, noise, 11, 5);
        // Access out of order to exercise prefix filling.
        assert_eq!(lazy.x(40), eager.x[39]);
        assert_eq!(lazy.x(2), eager.x[1]);
        assert_eq!(lazy.y(64), eager.y[63]);
        let set = lazy.materialize(64);
        assert_eq!(set.x, eager.x);
        assert_eq!(set.y, eager.y);
    }

    #[test]
    fn observation_moments_match_the_model() {
        let params = mild_params();
        let inst = make_instance(SolutionKind::SpikeAt(1), EigenvalueKind::MidClass, &params, 2)
            .unwrap();
        let noise = NoiseLevels::new(0.25, 0.04).unwrap();
        let reps = 100_000;
        let (mut my, mut vy, mut mx, mut vx) = (0.0, 0.0, 0.0, 0.0);
        for rep in 0..reps {
            let o = simulate_prefix(&inst, noise, 99, rep, 1).unwrap();
            my += o.y[0];
            vy += (o.y[0] - 1.0) * (o.y[0] - 1.0);
            mx += o.x[0];
            vx += (o.x[0] - 1.0) * (o.x[0] - 1.0);
        }
        let n = reps as f64;
        // a_1 f_1 = 1, Var Y = 0.25; a_1 = 1, Var X = 0.04.
        assert!((my / n - 1.0).abs() < 3.0 * 0.5 / n.sqrt());
        assert!((vy / n - 0.25).abs() < 0.01);
        assert!((mx / n - 1.0).abs() < 3.0 * 0.2 / n.sqrt());
        assert!((vx / n - 0.04).abs() < 0.002);
    }

    #[test]
    fn spike_outside_the_range_is_rejected() {
        let err = make_instance(
            SolutionKind::SpikeAt(9),
            EigenvalueKind::MidClass,
            &mild_params(),
            5,
        );
        assert!(matches!(
            err,
            Err(Error::DimensionOutOfRange { k: 9, max: 5 })
        ));
    }
}
