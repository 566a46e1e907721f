use serde::{Deserialize, Serialize};

use super::{Cell, ExperimentConfig, InstanceSpec, PolicySpec};
use crate::bandit::{BiasKind, BiasModel};
use crate::engine::{Allocation, RunRecord};
use crate::error::{Error, Result};

/// A single replication: one instance, one policy, one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceSpec,
    #[serde(default = "no_bias")]
    pub bias: BiasModel,
    /// When false the environment is unbiased while the engine still
    /// assumes `bias.bound`.
    #[serde(default = "yes")]
    pub inject_bias: bool,
    pub sigma: f64,
    pub budget: u64,
    pub policy: PolicySpec,
    #[serde(default = "one")]
    pub radius_factor: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub allocation: Allocation,
    #[serde(default = "one_pull")]
    pub min_pulls: u64,
    #[serde(default)]
    pub seed: u64,
}

fn no_bias() -> BiasModel {
    BiasModel::unbiased()
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn one_pull() -> u64 {
    1
}

fn default_delta() -> f64 {
    0.05
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.bias.validate()?;
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and non-negative"));
        }
        self.experiment().validate()
    }

    /// The equivalent one-cell, one-replication experiment.
    fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            name: String::new(),
            instance: self.instance.clone(),
            bias: self.bias.kind.clone(),
            bias_bounds: vec![self.bias.bound],
            bias_scale: Default::default(),
            inject_bias: self.inject_bias && self.bias.kind != BiasKind::Unbiased,
            sigmas: vec![self.sigma],
            budgets: vec![self.budget],
            radius_factors: vec![self.radius_factor],
            delta: self.delta,
            epsilon: self.epsilon,
            policies: vec![self.policy],
            replications: 1,
            base_seed: self.seed,
            allocation: self.allocation,
            min_pulls: self.min_pulls,
            pruning_rate: Default::default(),
            efficiency: None,
            max_cells: 1,
        }
    }

    /// Run with the configured seed, or `seed` when given.
    pub fn run(&self, seed: Option<u64>) -> Result<RunRecord> {
        let mut exp = self.experiment();
        exp.validate()?;
        if let Some(s) = seed {
            exp.base_seed = s;
        }
        let cell = Cell {
            bias_bound: self.bias.bound,
            sigma: self.sigma,
            budget: self.budget,
            radius_factor: self.radius_factor,
        };
        let flat = super::sweep::flat_instance(&exp, &cell)?;
        super::sweep::run_replication(&exp, &cell, flat.as_ref(), &self.policy, 0).map(|l| l.record)
    }
}
