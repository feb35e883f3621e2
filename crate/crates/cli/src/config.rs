//! The run configuration: one TOML document with a table per command.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use oco_queue::datacenter::{ExperimentConfig, SynthSpec};
use oco_queue::instances::StockInstance;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub verify: VerifyConfig,
    pub convergence: ConvergenceConfig,
    pub gen_trace: GenTraceConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// One stock instance under verification. Any of `d1`, `d2`, `g` replaces
/// the instance's own bound and is validated like a user declaration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyInstance {
    pub name: String,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub v: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub d1: Option<f64>,
    #[serde(default)]
    pub d2: Option<f64>,
    #[serde(default)]
    pub g: Option<f64>,
}

impl VerifyInstance {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            horizon: None,
            v: None,
            alpha: None,
            d1: None,
            d2: None,
            g: None,
        }
    }

    pub fn stock(&self) -> Result<StockInstance> {
        self.name.parse().map_err(anyhow::Error::msg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub instances: Vec<VerifyInstance>,
    /// Runs per instance for the deterministic checks.
    pub seeds: usize,
    pub first_seed: u64,
    /// Random comparison points per round for the decision-update inequality.
    pub decision_samples: usize,
    /// Runs per instance for the statistical checks; at least 30.
    pub monte_carlo_seeds: usize,
    /// Number of evenly spaced rounds for the Slater negativity estimate.
    pub slater_rounds: usize,
    /// Tail level of the queue threshold test.
    pub mu: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            instances: ["linear-1d", "quadratic-simplex-2d", "datacenter-desk"]
                .into_iter()
                .map(VerifyInstance::named)
                .collect(),
            seeds: 100,
            first_seed: 1,
            decision_samples: 2,
            monte_carlo_seeds: 50,
            slater_rounds: 5,
            mu: 0.1,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            bail!("verify.instances is empty");
        }
        for inst in &self.instances {
            inst.stock()?;
        }
        if self.seeds == 0 {
            bail!("verify.seeds must be positive");
        }
        if self.monte_carlo_seeds < oco_queue::analysis::MIN_SEEDS {
            bail!(
                "verify.monte_carlo_seeds is {}, at least {} required",
                self.monte_carlo_seeds,
                oco_queue::analysis::MIN_SEEDS
            );
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            bail!("verify.mu must lie strictly between 0 and 1");
        }
        if self.slater_rounds == 0 {
            bail!("verify.slater_rounds must be positive");
        }
        Ok(())
    }
}

/// Replaces measured metrics by a known series, to test the slope fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMetric {
    SqrtT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub instance: String,
    pub grid: Vec<usize>,
    pub seeds: usize,
    pub first_seed: u64,
    pub max_slope: f64,
    pub test_metric: Option<TestMetric>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            instance: "linear-1d".to_string(),
            grid: vec![100, 1_000, 10_000],
            seeds: 20,
            first_seed: 1,
            max_slope: 0.6,
            test_metric: None,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        self.instance.parse::<StockInstance>().map_err(anyhow::Error::msg)?;
        let mut grid = self.grid.clone();
        grid.sort_unstable();
        grid.dedup();
        if grid.len() < 3 || grid[0] == 0 {
            bail!("convergence.grid needs at least 3 distinct positive horizons, got {:?}", self.grid);
        }
        if self.seeds == 0 {
            bail!("convergence.seeds must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenTraceConfig {
    pub zones: usize,
    pub slots: usize,
    pub seed: u64,
    pub spec: SynthSpec,
    pub file: String,
}

impl Default for GenTraceConfig {
    fn default() -> Self {
        Self {
            zones: 10,
            slots: 2160,
            seed: 7,
            spec: SynthSpec::default(),
            file: "prices.csv".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let parsed: RunConfig = toml::from_str("").unwrap();
        assert_eq!(parsed, RunConfig::default());
    }

    #[test]
    fn nested_tables_parse() {
        let text = r#"
            [experiment]
            arrival_mean = 0.0
            horizon = 50
            policies = ["proposed", "react"]

            [experiment.trace]
            kind = "synthetic"
            seed = 3
            base = 10.0
            daily_amplitude = 0.5
            spike_prob = 0.0
            spike_scale = 1.0

            [[verify.instances]]
            name = "linear-1d"
            d2 = 0.5

            [convergence]
            grid = [10, 20, 40]
        "#;
        let c: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(c.experiment.horizon, 50);
        assert_eq!(c.verify.instances[0].d2, Some(0.5));
        assert_eq!(c.verify.seeds, 100);
        assert_eq!(c.convergence.grid, vec![10, 20, 40]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[experiment]\nhorizonn = 3").is_err());
    }

    #[test]
    fn single_horizon_grid_is_rejected() {
        let c = ConvergenceConfig {
            grid: vec![100],
            ..ConvergenceConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
