//! Replicated experiments over parameter grids.
//!
//! An [`ExperimentConfig`] names an instance, a bias model and grids over the
//! bias bound, noise, budget and radius factor. Every grid point is a *cell*;
//! each cell runs every listed policy for `replications` seeds. Seeds depend
//! only on the base seed, the cell key and the replication index, so policies
//! in one cell share noise streams and adding grid points never moves the
//! seeds of existing cells.

mod output;
mod run;
mod studies;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::bandit::{ArmLayout, BiasKind, BiasModel, TreeSpec};
use crate::confidence::ConfidenceConfig;
use crate::engine::{Allocation, PruningRateDef};
use crate::error::{Error, Result};

pub use output::{
    parse_record_lines, parse_sweep_csv, write_record_lines, write_sweep_csv, CSV_COLUMNS,
    CSV_SCHEMA,
};
pub use run::RunConfig;
pub use studies::{
    budget_to_target, degradation_study, efficiency_multiplier, scaling_curve, DegradationRow,
    ScalingPoint,
};
pub use sweep::{
    aggregate_records, run_cell_policy, run_sweep, Cell, Efficiency, RecordLine, SweepResult,
    SweepRow,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// Arm 0 at `baseline + gap`, the rest at `baseline`.
    SingleGap {
        arms: usize,
        gap: f64,
        #[serde(default)]
        baseline: f64,
    },
    /// Explicit true means.
    Means {
        means: Vec<f64>,
    },
    Tree(TreeSpec),
}

impl InstanceSpec {
    pub fn layout(&self) -> Option<ArmLayout> {
        match self {
            InstanceSpec::SingleGap {
                arms,
                gap,
                baseline,
            } => Some(ArmLayout::SingleGap {
                arms: *arms,
                gap: *gap,
                baseline: *baseline,
            }),
            InstanceSpec::Means { means } => Some(ArmLayout::Means(means.clone())),
            InstanceSpec::Tree(_) => None,
        }
    }

    /// Gap between the best and second-best true value.
    pub fn gap(&self) -> Result<f64> {
        match self {
            InstanceSpec::SingleGap { gap, .. } => Ok(*gap),
            InstanceSpec::Tree(spec) => Ok(spec.gap),
            InstanceSpec::Means { means } => {
                let mut sorted = means.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                match sorted.as_slice() {
                    [a, b, ..] => Ok(a - b),
                    _ => Err(Error::invalid("instance.means", "need at least 2 arms")),
                }
            }
        }
    }

    /// Number of arms in the initial frontier (root children for trees).
    pub fn frontier_size(&self) -> usize {
        match self {
            InstanceSpec::SingleGap { arms, .. } => *arms,
            InstanceSpec::Means { means } => means.len(),
            InstanceSpec::Tree(spec) => spec.branching,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InstanceSpec::Tree(spec) => spec.validate(),
            _ => {
                let means = self.layout().expect("flat instance").means()?;
                if let Some(i) = means.iter().position(|m| !m.is_finite()) {
                    return Err(Error::invalid(
                        format!("instance.means[{i}]"),
                        "must be finite",
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasScale {
    /// Grid values are the bound `L` itself.
    #[default]
    Absolute,
    /// Grid values are multiples of the instance gap.
    GapFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    StrictPac,
    Naive,
    Uniform,
    Proportion {
        a: f64,
    },
    DynamicPac {
        c_bias: f64,
    },
    Uct {
        /// Defaults to the cell's noise scale.
        #[serde(default)]
        exploration: Option<f64>,
    },
}

impl PolicySpec {
    pub fn label(&self) -> String {
        match self {
            PolicySpec::StrictPac => "strict_pac".into(),
            PolicySpec::Naive => "naive".into(),
            PolicySpec::Uniform => "uniform".into(),
            PolicySpec::Proportion { a } => format!("proportion({a})"),
            PolicySpec::DynamicPac { c_bias } => format!("dynamic_pac({c_bias})"),
            PolicySpec::Uct { exploration: None } => "uct".into(),
            PolicySpec::Uct {
                exploration: Some(c),
            } => format!("uct({c})"),
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        match *self {
            PolicySpec::Proportion { a } if !(0.0..1.0).contains(&a) => {
                Err(Error::invalid(format!("{field}.a"), "must lie in [0, 1)"))
            }
            PolicySpec::DynamicPac { c_bias } if !(c_bias > 0.0 && c_bias.is_finite()) => Err(
                Error::invalid(format!("{field}.c_bias"), "must be positive"),
            ),
            PolicySpec::Uct {
                exploration: Some(c),
            } if !(c >= 0.0 && c.is_finite()) => Err(Error::invalid(
                format!("{field}.exploration"),
                "must be finite and non-negative",
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencySpec {
    #[serde(default = "default_target")]
    pub target: f64,
    /// Policy every other policy is compared against.
    #[serde(default = "default_reference")]
    pub reference: PolicySpec,
    /// First budget of the search; defaults to the frontier size.
    #[serde(default)]
    pub base_budget: Option<u64>,
    /// The search gives up beyond `ceiling_factor * base_budget`.
    #[serde(default = "default_ceiling")]
    pub ceiling_factor: u64,
}

fn default_target() -> f64 {
    0.9
}

fn default_reference() -> PolicySpec {
    PolicySpec::Uct { exploration: None }
}

fn default_ceiling() -> u64 {
    64
}

impl Default for EfficiencySpec {
    fn default() -> Self {
        EfficiencySpec {
            target: default_target(),
            reference: default_reference(),
            base_budget: None,
            ceiling_factor: default_ceiling(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub instance: InstanceSpec,
    pub bias: BiasKind,
    pub bias_bounds: Vec<f64>,
    #[serde(default)]
    pub bias_scale: BiasScale,
    /// When false the environment is unbiased while the engine still
    /// assumes the configured bound.
    #[serde(default = "yes")]
    pub inject_bias: bool,
    pub sigmas: Vec<f64>,
    pub budgets: Vec<u64>,
    #[serde(default = "default_radius_factors")]
    pub radius_factors: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub policies: Vec<PolicySpec>,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub allocation: Allocation,
    #[serde(default = "default_min_pulls")]
    pub min_pulls: u64,
    #[serde(default)]
    pub pruning_rate: PruningRateDef,
    #[serde(default)]
    pub efficiency: Option<EfficiencySpec>,
    /// Upper bound on `cells * policies`.
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
}

fn yes() -> bool {
    true
}

fn default_radius_factors() -> Vec<f64> {
    vec![1.0]
}

fn default_delta() -> f64 {
    0.05
}

fn default_replications() -> u64 {
    500
}

fn default_min_pulls() -> u64 {
    1
}

fn default_max_cells() -> usize {
    10_000
}

fn check_grid<T: Copy>(
    field: &str,
    values: &[T],
    ok: impl Fn(T) -> bool,
    what: &str,
) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(field, "grid is empty"));
    }
    match values.iter().position(|&v| !ok(v)) {
        Some(i) => Err(Error::invalid(format!("{field}[{i}]"), what)),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    /// Parse and validate a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        check_grid(
            "bias_bounds",
            &self.bias_bounds,
            |l: f64| l >= 0.0 && l.is_finite(),
            "must be finite and non-negative",
        )?;
        check_grid(
            "sigmas",
            &self.sigmas,
            |s: f64| s >= 0.0 && s.is_finite(),
            "must be finite and non-negative",
        )?;
        check_grid(
            "budgets",
            &self.budgets,
            |n: u64| n >= 1,
            "must be at least 1",
        )?;
        check_grid(
            "radius_factors",
            &self.radius_factors,
            |c: f64| c > 0.0 && c.is_finite(),
            "must be finite and positive",
        )?;
        if self.policies.is_empty() {
            return Err(Error::invalid("policies", "list is empty"));
        }
        for (i, p) in self.policies.iter().enumerate() {
            p.validate(&format!("policies[{i}]"))?;
        }
        if self.replications < 1 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if self.min_pulls < 1 {
            return Err(Error::invalid("min_pulls", "must be at least 1"));
        }
        ConfidenceConfig::new(1.0, self.delta)
            .with_epsilon(self.epsilon)
            .validate()?;
        if let Some(eff) = &self.efficiency {
            if !(eff.target > 0.0 && eff.target <= 1.0) {
                return Err(Error::invalid("efficiency.target", "must lie in (0, 1]"));
            }
            if eff.ceiling_factor < 1 {
                return Err(Error::invalid(
                    "efficiency.ceiling_factor",
                    "must be at least 1",
                ));
            }
            if eff.base_budget == Some(0) {
                return Err(Error::invalid(
                    "efficiency.base_budget",
                    "must be at least 1",
                ));
            }
            eff.reference.validate("efficiency.reference")?;
        }
        // Build every bias model once so offsets are checked up front.
        for &l in &self.bias_bounds {
            let model = self.bias_model(self.absolute_bound(l)?);
            model.validate()?;
            if let Some(layout) = self.instance.layout() {
                model.offsets(&layout.means()?)?;
            }
        }
        let cells = self.cell_count();
        let total = cells.saturating_mul(self.policies.len());
        if total > self.max_cells {
            return Err(Error::TooManyCells {
                cells: total,
                ceiling: self.max_cells,
            });
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.bias_bounds.len() * self.sigmas.len() * self.budgets.len() * self.radius_factors.len()
    }

    /// Grid value converted to the bound `L`.
    pub fn absolute_bound(&self, value: f64) -> Result<f64> {
        Ok(match self.bias_scale {
            BiasScale::Absolute => value,
            BiasScale::GapFraction => value * self.instance.gap()?,
        })
    }

    pub fn bias_model(&self, bound: f64) -> BiasModel {
        BiasModel {
            kind: self.bias.clone(),
            bound,
        }
    }

    /// Bias model seen by the environment.
    pub fn environment_bias(&self, bound: f64) -> BiasModel {
        if self.inject_bias {
            self.bias_model(bound)
        } else {
            BiasModel::unbiased()
        }
    }
}
