//! Experiment configuration: strict TOML with defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::frequency::Tolerance;
use crate::grid::MIN_NODES;
use crate::hardy::validate_gamma;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Interior radial nodes.
    pub n: usize,
    /// Domain radius `R`.
    pub radius: f64,
    /// Coulomb strength.
    pub k: f64,
    /// Terminal time `T`.
    pub terminal: f64,
    /// Weight parameters used by frequency experiments.
    pub lambdas: Vec<f64>,
    /// Highest angular mode.
    pub l_max: usize,
    /// Angular index for `spectrum`.
    pub l: usize,
    /// Observation radius `r`.
    pub obs_radius: f64,
    /// Observation or weight center; must lie on the z-axis.
    pub center: [f64; 3],
    pub delta: f64,
    pub local_radius: f64,
    pub m: f64,
    pub gamma: f64,
    pub family_size: usize,
    pub seed: u64,
    /// Grid sizes for refinement comparisons.
    pub refine: Vec<usize>,
    pub polar_order: usize,
    pub time_samples: usize,
    pub budget: usize,
    pub starts: usize,
    pub tolerance: Tolerance,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 511,
            radius: 1.0,
            k: 0.0,
            terminal: 0.5,
            lambdas: vec![0.1, 0.5, 1.0],
            l_max: 8,
            l: 0,
            obs_radius: 0.5,
            center: [0.0; 3],
            delta: 0.5,
            local_radius: 0.4,
            m: 2.0,
            gamma: 1.0,
            family_size: 50,
            seed: 42,
            refine: vec![255, 511],
            polar_order: crate::field::DEFAULT_POLAR_ORDER,
            time_samples: 129,
            budget: 2000,
            starts: 8,
            tolerance: Tolerance::CALIBRATED,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_NODES {
            return config(format!("n = {} is below the grid minimum {MIN_NODES}", self.n));
        }
        if let Some(&bad) = self.refine.iter().find(|&&n| n < MIN_NODES) {
            return config(format!("refinement level {bad} is below the grid minimum {MIN_NODES}"));
        }
        if !(self.radius > 0.0) {
            return config(format!("radius must be positive, got {}", self.radius));
        }
        if !self.k.is_finite() {
            return config("k must be finite");
        }
        if !(self.terminal > 0.0 && self.terminal <= 1.0) {
            return config(format!("terminal time must lie in (0, 1], got {}", self.terminal));
        }
        if let Some(&bad) = self.lambdas.iter().find(|&&l| !(l > 0.0)) {
            return config(format!("weight parameters must be positive, got {bad}"));
        }
        if self.l > self.l_max {
            return config(format!("l = {} exceeds l_max = {}", self.l, self.l_max));
        }
        crate::grid::axial_offset(self.center)?;
        let c = self.center[2].abs();
        if c >= self.radius {
            return config("center must lie inside the domain");
        }
        if !(self.obs_radius > 0.0 && c + self.obs_radius < self.radius) {
            return config(format!("observation ball of radius {} leaves the domain", self.obs_radius));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return config(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if !(self.local_radius > 0.0 && c + (1.0 + self.delta) * self.local_radius < self.radius) {
            return config("enlarged local ball leaves the domain");
        }
        if !(self.m >= 0.0) {
            return config(format!("m must be non-negative, got {}", self.m));
        }
        validate_gamma(self.gamma)?;
        if self.family_size == 0 {
            return config("family_size must be positive");
        }
        if self.polar_order < 2 {
            return config("polar_order must be at least 2");
        }
        if self.time_samples < 65 {
            return config(format!("time_samples must be at least 65, got {}", self.time_samples));
        }
        if self.budget < 100 {
            return config(format!("budget must be at least 100, got {}", self.budget));
        }
        if self.starts == 0 {
            return config("starts must be positive");
        }
        if !(self.tolerance.c1 >= 0.0 && self.tolerance.c2 >= 0.0) {
            return config("tolerance constants must be non-negative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn rejections() {
        assert!(ExperimentConfig::from_toml("n = 8").is_err());
        assert!(ExperimentConfig::from_toml("gamma = 2.5").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("center = [0.1, 0.0, 0.0]").is_err());
        assert!(ExperimentConfig::from_toml("n = 1023\nk = 1.0").is_ok());
    }
}
