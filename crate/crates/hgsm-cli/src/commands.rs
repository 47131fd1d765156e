//! Subcommand implementations. Each one builds its artifacts from the
//! effective configuration alone, so a rerun with the same config and
//! seed reproduces every data file byte for byte.

use std::path::PathBuf;

use anyhow::Result;

use hgsm::estimator::estimate;
use hgsm::model::{
    make_instance, simulate, truncation_length, NoiseLevels, ProblemInstance,
};
use hgsm::oracle::oracle_report;
use hgsm::verify::{
    check_adaptive_selection, check_minimax_bound, check_penalty_scale_bound,
    check_ratio_moment_bounds, event_probability_scan, mc_risk, rate_fit,
    EstimationMode, McConfig, RatePoint, RateRegressor,
};

use crate::config::{ExperimentConfig, Family, Mode};
use crate::output::{num, rate_plot, write_atomic, Csv, Provenance};

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub workers: usize,
    pub prov: Provenance,
    pub out: PathBuf,
}

impl Ctx {
    pub fn new(cfg: ExperimentConfig, workers: usize) -> Self {
        let prov = Provenance {
            config_hash: cfg.hash(),
            base_seed: cfg.base_seed,
        };
        let out = PathBuf::from(&cfg.out_dir);
        Self {
            cfg,
            workers,
            prov,
            out,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Noise pairs of the grid, in config order.
    fn noise_grid(&self) -> Result<Vec<NoiseLevels>> {
        self.cfg
            .nu_grid
            .iter()
            .map(|&nu| Ok(NoiseLevels::new(nu, self.cfg.eps_for(nu))?))
            .collect()
    }

    /// One truth shared by every grid point, long enough for the finest
    /// noise level.
    fn instance(&self) -> Result<ProblemInstance> {
        let params = self.cfg.class_params()?;
        let len = self
            .noise_grid()?
            .iter()
            .map(|&n| truncation_length(n, self.cfg.j_cap))
            .max()
            .expect("validated grid is non-empty");
        Ok(make_instance(
            self.cfg.solution_kind(),
            self.cfg.eigenvalue_kind(),
            &params,
            len,
        )?)
    }
}

fn mode_label(mode: EstimationMode) -> &'static str {
    match mode {
        EstimationMode::OracleKStar => "oracle",
        EstimationMode::Adaptive => "adaptive",
    }
}

pub fn run_simulate(ctx: &Ctx) -> Result<()> {
    let instance = ctx.instance()?;
    let noise = ctx.noise_grid()?[0];
    let obs = simulate(&instance, noise, ctx.cfg.base_seed, 0);
    let mut csv = Csv::new(&ctx.prov, &["j", "y", "x"]);
    for j in 1..=obs.len() {
        csv.row(&[j.to_string(), num(obs.y[j - 1]), num(obs.x[j - 1])]);
    }
    let path = ctx.path("observations.csv");
    csv.write(&path)?;
    println!(
        "wrote {} ({} coordinates, nu={}, eps={})",
        path.display(),
        obs.len(),
        num(noise.nu()),
        num(noise.eps())
    );
    Ok(())
}

pub fn run_estimate(ctx: &Ctx, k: Option<usize>) -> Result<()> {
    let instance = ctx.instance()?;
    let noise = ctx.noise_grid()?[0];
    let params = &instance.params;
    let obs = simulate(&instance, noise, ctx.cfg.base_seed, 0);

    let est = match (k, ctx.cfg.mode) {
        (Some(k), _) => {
            println!("k={k} (fixed)");
            estimate(&obs, k, &params.omega)?
        }
        (None, Mode::Oracle) => {
            let report = oracle_report(params, noise.nu(), noise.eps(), obs.len())?;
            println!("k={} (oracle dimension)", report.k_star);
            estimate(&obs, report.k_star, &params.omega)?
        }
        (None, Mode::Adaptive | Mode::Both) => {
            let fit = hgsm::adaptive::adaptive_estimate(
                &obs,
                &params.omega,
                ctx.cfg.penalty_constant,
            )?;
            println!("k_hat={} (adaptive, cap {})", fit.trace.k_hat, fit.bounds.k);
            fit.fit
        }
    };

    let mut csv = Csv::new(&ctx.prov, &["j", "coeff", "prefix_norm"]);
    for j in 1..=est.k {
        csv.row(&[
            j.to_string(),
            num(est.coeffs[j - 1]),
            num(est.prefix_norms[j - 1]),
        ]);
    }
    let path = ctx.path("estimate.csv");
    csv.write(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

const RISK_COLUMNS: &[&str] = &[
    "mode",
    "nu",
    "eps",
    "replications",
    "risk_mean",
    "risk_stderr",
    "risk_median",
    "risk_median_lo",
    "risk_median_hi",
    "k_min",
    "k_median",
    "k_max",
    "k_star",
    "psi_nu",
    "upsilon_eps",
    "psi_diamond",
    "penalty_constant",
];

pub fn run_mc_risk(ctx: &Ctx) -> Result<()> {
    let instance = ctx.instance()?;
    let mut csv = Csv::new(&ctx.prov, RISK_COLUMNS);
    for noise in ctx.noise_grid()? {
        for mode in ctx.cfg.modes() {
            let report = mc_risk(&McConfig {
                instance: &instance,
                noise,
                replications: ctx.cfg.replications,
                base_seed: ctx.cfg.base_seed,
                mode,
                penalty_constant: ctx.cfg.penalty_constant,
                workers: ctx.workers,
            })?;
            println!(
                "mc-risk mode={} nu={} risk_mean={} k_median={}",
                mode_label(mode),
                num(report.nu),
                num(report.risk_mean),
                report.k_median
            );
            csv.row(&[
                mode_label(mode).to_string(),
                num(report.nu),
                num(report.eps),
                report.replications.to_string(),
                num(report.risk_mean),
                num(report.risk_stderr),
                num(report.risk_median),
                num(report.risk_median_lo),
                num(report.risk_median_hi),
                report.k_min.to_string(),
                report.k_median.to_string(),
                report.k_max.to_string(),
                report.benchmark.k_star.to_string(),
                num(report.benchmark.psi_nu),
                num(report.benchmark.upsilon_eps),
                num(report.benchmark.psi_diamond),
                num(report.penalty_constant),
            ]);
        }
    }
    let path = ctx.path("risk.csv");
    csv.write(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn run_rate_fit(ctx: &Ctx) -> Result<()> {
    let instance = ctx.instance()?;
    let mode = match ctx.cfg.mode {
        Mode::Adaptive => EstimationMode::Adaptive,
        Mode::Oracle | Mode::Both => EstimationMode::OracleKStar,
    };
    let e = instance
        .params
        .exponents
        .expect("standard families carry closed-form exponents");
    let (regressor, expected, x_label) = match ctx.cfg.family {
        Family::Mild => (
            RateRegressor::LogNoise,
            2.0 * (e.p - e.s) / (2.0 * e.p + 2.0 * e.b + 1.0),
            "ln nu",
        ),
        Family::Severe => (
            RateRegressor::LogAbsLogNoise,
            -(e.p - e.s) / e.b,
            "ln |ln nu|",
        ),
    };

    let mut reports = Vec::new();
    for noise in ctx.noise_grid()? {
        reports.push(mc_risk(&McConfig {
            instance: &instance,
            noise,
            replications: ctx.cfg.replications,
            base_seed: ctx.cfg.base_seed,
            mode,
            penalty_constant: ctx.cfg.penalty_constant,
            workers: ctx.workers,
        })?);
    }
    let points: Vec<RatePoint> = reports
        .iter()
        .map(|r| RatePoint {
            noise: r.nu,
            risk: r.risk_mean,
        })
        .collect();
    let fit = rate_fit(&points, regressor, Some(expected))?;

    let mut csv = Csv::new(
        &ctx.prov,
        &[
            "mode",
            "nu",
            "eps",
            "risk_mean",
            "risk_stderr",
            "x",
            "y",
            "slope",
            "intercept",
            "expected_slope",
            "residual_rms",
        ],
    );
    for (report, &(x, y)) in reports.iter().zip(&fit.xy) {
        csv.row(&[
            mode_label(mode).to_string(),
            num(report.nu),
            num(report.eps),
            num(report.risk_mean),
            num(report.risk_stderr),
            num(x),
            num(y),
            num(fit.slope),
            num(fit.intercept),
            num(expected),
            num(fit.residual_rms),
        ]);
    }
    let csv_path = ctx.path("rate.csv");
    csv.write(&csv_path)?;
    let svg_path = ctx.path("rate.svg");
    write_atomic(
        &svg_path,
        rate_plot(&fit.xy, fit.slope, fit.intercept, x_label).as_bytes(),
    )?;
    println!(
        "slope={:.4} expected={:.4} over {} points; wrote {} and {}",
        fit.slope,
        expected,
        fit.xy.len(),
        csv_path.display(),
        svg_path.display()
    );
    Ok(())
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
#[value(rename_all = "kebab-case")]
pub enum CheckTag {
    /// Per-realization selection bound with data-driven penalties.
    OracleInequality,
    /// Risk of the oracle-dimension estimator against its explicit bound.
    MinimaxBound,
    /// Moment bounds of the thresholded eigenvalue ratio.
    Moments,
    /// Scale of the reference penalty at the upper truncation bound.
    PenaltyScale,
    /// Monotone trend of exceptional-event frequencies.
    Events,
    /// Growth of the spectral cutoff expression along the grid.
    Cutoff,
}

fn report_check(tag: &str, pass: bool, details: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("CHECK {tag}: {verdict} ({details})");
}

pub fn run_check(ctx: &Ctx, tag: CheckTag) -> Result<bool> {
    let instance = ctx.instance()?;
    let grid = ctx.noise_grid()?;
    let reps = ctx.cfg.replications;
    match tag {
        CheckTag::OracleInequality => {
            let report = check_adaptive_selection(
                &instance,
                grid[0],
                reps,
                ctx.cfg.base_seed,
                ctx.cfg.penalty_constant,
            )?;
            let mut csv = Csv::new(
                &ctx.prov,
                &["check", "trials", "violations", "worst_margin", "notes"],
            );
            csv.row(&[
                report.check.to_string(),
                report.trials.to_string(),
                report.violations.to_string(),
                num(report.worst_margin),
                report.notes.clone(),
            ]);
            csv.write(&ctx.path("check-oracle-inequality.csv"))?;
            let pass = report.pass();
            report_check(
                "oracle-inequality",
                pass,
                &format!(
                    "{} trials, {} violations, worst margin {:.3e}; {}",
                    report.trials, report.violations, report.worst_margin, report.notes
                ),
            );
            Ok(pass)
        }
        CheckTag::MinimaxBound => {
            let mut csv = Csv::new(
                &ctx.prov,
                &[
                    "nu",
                    "eps",
                    "replications",
                    "risk_mean",
                    "risk_stderr",
                    "bound",
                    "slack",
                    "pass",
                ],
            );
            let mut all = true;
            for &noise in &grid {
                let outcome = check_minimax_bound(&McConfig {
                    instance: &instance,
                    noise,
                    replications: reps,
                    base_seed: ctx.cfg.base_seed,
                    mode: EstimationMode::OracleKStar,
                    penalty_constant: ctx.cfg.penalty_constant,
                    workers: ctx.workers,
                })?;
                all &= outcome.pass;
                csv.row(&[
                    num(outcome.report.nu),
                    num(outcome.report.eps),
                    outcome.report.replications.to_string(),
                    num(outcome.report.risk_mean),
                    num(outcome.report.risk_stderr),
                    num(outcome.bound),
                    num(outcome.slack),
                    outcome.pass.to_string(),
                ]);
            }
            csv.write(&ctx.path("check-minimax-bound.csv"))?;
            report_check(
                "minimax-bound",
                all,
                &format!("{} grid points, {} replications each", grid.len(), reps),
            );
            Ok(all)
        }
        CheckTag::Moments => {
            let coords: Vec<usize> = (1..=10.min(instance.len())).collect();
            let eps_grid: Vec<f64> = grid.iter().map(|n| n.eps()).collect();
            let report = check_ratio_moment_bounds(
                &instance,
                &coords,
                &eps_grid,
                reps,
                ctx.cfg.base_seed,
            )?;
            let mut csv = Csv::new(
                &ctx.prov,
                &[
                    "j",
                    "eps",
                    "a",
                    "recentred_sq_mean",
                    "recentred_sq_se",
                    "recentred_sq_bound",
                    "threshold_freq",
                    "threshold_se",
                    "threshold_bound",
                    "ratio_sq_mean",
                    "ratio_sq_se",
                    "ratio_sq_bound",
                    "pass",
                ],
            );
            for row in &report.rows {
                csv.row(&[
                    row.j.to_string(),
                    num(row.eps),
                    num(row.a),
                    num(row.recentred_sq_mean),
                    num(row.recentred_sq_se),
                    num(row.recentred_sq_bound),
                    num(row.threshold_freq),
                    num(row.threshold_se),
                    num(row.threshold_bound),
                    num(row.ratio_sq_mean),
                    num(row.ratio_sq_se),
                    num(hgsm::verify::RATIO_SQ_BOUND),
                    row.pass.to_string(),
                ]);
            }
            csv.write(&ctx.path("check-moments.csv"))?;
            let pass = report.summary.pass();
            report_check(
                "moments",
                pass,
                &format!(
                    "{} rows, {} violations, worst margin {:.3e}",
                    report.summary.trials,
                    report.summary.violations,
                    report.summary.worst_margin
                ),
            );
            Ok(pass)
        }
        CheckTag::PenaltyScale => {
            let report = check_penalty_scale_bound(&instance, &ctx.cfg.nu_grid)?;
            let mut csv = Csv::new(
                &ctx.prov,
                &["nu", "n_plus", "nu_delta", "bound", "pass"],
            );
            for row in &report.rows {
                csv.row(&[
                    num(row.nu),
                    row.n_plus.to_string(),
                    num(row.nu_delta),
                    num(row.bound),
                    row.pass.to_string(),
                ]);
            }
            csv.write(&ctx.path("check-penalty-scale.csv"))?;
            let pass = report.summary.pass();
            report_check(
                "penalty-scale",
                pass,
                &format!(
                    "{} grid points, worst margin {:.3e}",
                    report.summary.trials, report.summary.worst_margin
                ),
            );
            Ok(pass)
        }
        CheckTag::Events => {
            let report =
                event_probability_scan(&instance, &ctx.cfg.nu_grid, reps, ctx.cfg.base_seed)?;
            let mut csv = Csv::new(
                &ctx.prov,
                &[
                    "eps",
                    "omega_eps_c",
                    "omega_eps_se",
                    "omega_tilde_c",
                    "omega_tilde_se",
                    "mho_c",
                    "mho_se",
                    "omega_const",
                    "mho_const",
                ],
            );
            for row in &report.rows {
                csv.row(&[
                    num(row.eps),
                    num(row.omega_eps_c),
                    num(row.omega_eps_se),
                    num(row.omega_tilde_c),
                    num(row.omega_tilde_se),
                    num(row.mho_c),
                    num(row.mho_se),
                    num(row.omega_const),
                    num(row.mho_const),
                ]);
            }
            csv.write(&ctx.path("check-events.csv"))?;
            let pass = report.monotone && report.summary.pass();
            report_check(
                "events",
                pass,
                &format!(
                    "{} levels, {} replications, monotone {}",
                    report.rows.len(),
                    report.replications,
                    report.monotone
                ),
            );
            Ok(pass)
        }
        CheckTag::Cutoff => {
            let params = ctx.cfg.class_params()?;
            let report =
                hgsm::adaptive::check_cutoff_condition(&params.b, params.d, &ctx.cfg.nu_grid)?;
            let mut csv = Csv::new(&ctx.prov, &["eps", "m_plus", "log10_value"]);
            for e in &report.entries {
                csv.row(&[num(e.eps), e.m_plus.to_string(), num(e.log10_value)]);
            }
            csv.write(&ctx.path("check-cutoff.csv"))?;
            let pass = !report.diverging;
            report_check(
                "cutoff",
                pass,
                &format!(
                    "max log10 value {:.2}, diverging {}; {}",
                    report.max_log10, report.diverging, report.interpretation
                ),
            );
            Ok(pass)
        }
    }
}

pub fn run_oracle_table(ctx: &Ctx) -> Result<()> {
    let params = ctx.cfg.class_params()?;
    let mut csv = Csv::new(
        &ctx.prov,
        &[
            "nu",
            "eps",
            "k_star",
            "psi_nu",
            "upsilon_eps",
            "upsilon_argmax",
            "eta",
            "k_minus",
            "psi_diamond",
            "theoretical_exponent",
            "theoretical_rate",
            "cap_limited",
        ],
    );
    for noise in ctx.noise_grid()? {
        let report = oracle_report(&params, noise.nu(), noise.eps(), ctx.cfg.j_cap)?;
        println!(
            "oracle-table nu={} k_star={} psi_nu={}",
            num(report.nu),
            report.k_star,
            num(report.psi_nu)
        );
        csv.row(&[
            num(report.nu),
            num(report.eps),
            report.k_star.to_string(),
            num(report.psi_nu),
            num(report.upsilon_eps),
            report.upsilon_argmax.to_string(),
            num(report.eta),
            report.k_minus.to_string(),
            num(report.psi_diamond),
            report.theoretical_exponent.map(num).unwrap_or_default(),
            report.theoretical_rate.map(num).unwrap_or_default(),
            report.cap_limited.to_string(),
        ]);
    }
    let path = ctx.path("oracle.csv");
    csv.write(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
