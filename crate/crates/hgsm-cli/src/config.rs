//! Experiment configuration: a flat JSON file, flag overrides on top, and
//! the provenance hash stamped into every output.
//!
//! The hash covers the effective configuration after overrides, except
//! for the output directory, which changes where results land but not
//! what they contain. Worker count is a flag, never part of the config,
//! for the same reason.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hgsm::model::{ClassParams, EigenvalueKind, SolutionKind};
use hgsm::verify::EstimationMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Mild,
    Severe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solution {
    Spread,
    Spike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eigenvalues {
    Mid,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsPolicy {
    /// `eps = nu` at every grid point.
    Equal,
    /// `eps = eps_value` everywhere.
    Fixed,
    /// `eps = nu^eps_value`.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Oracle,
    Adaptive,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub family: Family,
    pub p: f64,
    pub b: f64,
    pub s: f64,
    pub r: f64,
    pub d: f64,
    pub solution: Solution,
    /// Coordinate carrying the class budget when `solution` is `spike`.
    pub spike_at: usize,
    pub eigenvalues: Eigenvalues,
    pub nu_grid: Vec<f64>,
    pub eps_policy: EpsPolicy,
    /// Fixed level for the `fixed` policy, exponent for `power`; unused
    /// under `equal`.
    pub eps_value: f64,
    pub replications: usize,
    pub base_seed: u64,
    pub mode: Mode,
    pub penalty_constant: f64,
    pub j_cap: usize,
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: Family::Mild,
            p: 1.0,
            b: 1.0,
            s: 0.0,
            r: 1.0,
            d: 2.0,
            solution: Solution::Spread,
            spike_at: 1,
            eigenvalues: Eigenvalues::Mid,
            nu_grid: vec![1e-2, 1e-3],
            eps_policy: EpsPolicy::Equal,
            eps_value: 1e-2,
            replications: 2000,
            base_seed: 1,
            mode: Mode::Oracle,
            penalty_constant: hgsm::adaptive::DEFAULT_PENALTY_CONSTANT,
            j_cap: 10_000,
            out_dir: "out".into(),
        }
    }
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub penalty_constant: Option<f64>,
    pub mode: Option<Mode>,
    pub trials: Option<usize>,
}

impl ExperimentConfig {
    /// Reads the file when given, applies overrides, validates. Every
    /// failure here is a configuration error (exit code 2).
    pub fn load(path: Option<&Path>, over: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?
            }
            None => Self::default(),
        };
        if let Some(seed) = over.seed {
            cfg.base_seed = seed;
        }
        if let Some(out) = &over.out {
            cfg.out_dir = out.clone();
        }
        if let Some(c) = over.penalty_constant {
            cfg.penalty_constant = c;
        }
        if let Some(m) = over.mode {
            cfg.mode = m;
        }
        if let Some(t) = over.trials {
            cfg.replications = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.nu_grid.is_empty() {
            bail!("nu_grid: at least one noise level is required");
        }
        for &nu in &self.nu_grid {
            if !(nu > 0.0 && nu < 1.0) {
                bail!("nu_grid: value {nu} outside (0, 1)");
            }
        }
        match self.eps_policy {
            EpsPolicy::Fixed => {
                if !(self.eps_value > 0.0 && self.eps_value < 1.0) {
                    bail!("eps_value: fixed level {} outside (0, 1)", self.eps_value);
                }
            }
            EpsPolicy::Power => {
                if !(self.eps_value > 0.0) {
                    bail!("eps_value: power exponent {} must be positive", self.eps_value);
                }
            }
            EpsPolicy::Equal => {}
        }
        if self.replications < 1 {
            bail!("replications: must be at least 1");
        }
        if self.j_cap < 1 {
            bail!("j_cap: must be at least 1");
        }
        if self.spike_at < 1 {
            bail!("spike_at: coordinates are 1-based");
        }
        if !(self.penalty_constant > 0.0) {
            bail!("penalty_constant: must be positive");
        }
        self.class_params().map_err(|e| anyhow::anyhow!("class parameters: {e}"))?;
        Ok(())
    }

    pub fn class_params(&self) -> hgsm::Result<ClassParams> {
        match self.family {
            Family::Mild => ClassParams::mild(self.p, self.b, self.s, self.r, self.d),
            Family::Severe => ClassParams::severe(self.p, self.b, self.s, self.r, self.d),
        }
    }

    pub fn solution_kind(&self) -> SolutionKind {
        match self.solution {
            Solution::Spread => SolutionKind::Spread,
            Solution::Spike => SolutionKind::SpikeAt(self.spike_at),
        }
    }

    pub fn eigenvalue_kind(&self) -> EigenvalueKind {
        match self.eigenvalues {
            Eigenvalues::Mid => EigenvalueKind::MidClass,
            Eigenvalues::Edge => EigenvalueKind::Edge,
        }
    }

    pub fn eps_for(&self, nu: f64) -> f64 {
        match self.eps_policy {
            EpsPolicy::Equal => nu,
            EpsPolicy::Fixed => self.eps_value,
            EpsPolicy::Power => nu.powf(self.eps_value),
        }
    }

    /// Estimation modes the orchestrator runs, in a fixed order.
    pub fn modes(&self) -> Vec<EstimationMode> {
        match self.mode {
            Mode::Oracle => vec![EstimationMode::OracleKStar],
            Mode::Adaptive => vec![EstimationMode::Adaptive],
            Mode::Both => vec![EstimationMode::OracleKStar, EstimationMode::Adaptive],
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization,
    /// with the output directory blanked out.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value["out_dir"] = serde_json::Value::String(String::new());
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn hash_ignores_out_dir_but_not_seed() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.base_seed = 2;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"familly": "mild"}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("familly"), "{err}");
    }

    #[test]
    fn grid_values_outside_the_unit_interval_fail() {
        let mut cfg = ExperimentConfig::default();
        cfg.nu_grid = vec![0.5, 1.5];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn power_policy_requires_positive_exponent() {
        let mut cfg = ExperimentConfig::default();
        cfg.eps_policy = EpsPolicy::Power;
        cfg.eps_value = 0.0;
        assert!(cfg.validate().is_err());
        cfg.eps_value = 2.0;
        cfg.validate().unwrap();
        assert_eq!(cfg.eps_for(1e-2), 1e-4);
    }
}
