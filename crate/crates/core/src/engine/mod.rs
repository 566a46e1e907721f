//! Frontier search with bias-aware confidence pruning, plus the baseline
//! policies it is compared against.
//!
//! One epoch of [`run_pac_mcts`]:
//!
//! 1. allocate samples to the active frontier (round-robin or UCB-greedy);
//! 2. recompute every radius with the *current* frontier size in the union
//!    bound, `u_dist(n) = c * u_stat(n, |A_t|) + L`;
//! 3. prune every arm whose optimistic value falls below the pessimistic
//!    value of the empirical best, minus `epsilon`;
//! 4. in tree environments, expand the most optimistic arm into its children.
//!
//! Because `|A_t|` shrinks as arms are pruned, the radii shrink with it. The
//! run therefore books its failure budget against the live frontier rather
//! than the initial one.

mod dynamic;
mod pac;
mod uct;

use serde::{Deserialize, Serialize};

use crate::bandit::{ArmId, ArmStats, GroundTruth};
use crate::confidence::ConfidenceConfig;
use crate::error::{Error, Result};

pub use dynamic::{estimate_dynamic_bias, frontier_spread};
pub use pac::{run_engine, run_naive_pruning, run_pac_mcts, run_proportion_pruning, run_uniform};
pub use uct::run_baseline_uct;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruningPolicy {
    /// Confidence pruning with the bias-shielded radius.
    StrictPac,
    /// Drop the `floor(a |A_t|)` lowest empirical means after every pass.
    Proportion(f64),
    /// Confidence pruning with the statistical radius only.
    Naive,
    /// Never prune.
    None,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Allocation {
    /// One pull per active arm per epoch.
    #[default]
    RoundRobin,
    /// Pull every under-sampled arm, otherwise the single most optimistic arm.
    UcbGreedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub confidence: ConfidenceConfig,
    pub policy: PruningPolicy,
    pub budget: u64,
    #[serde(default)]
    pub allocation: Allocation,
    /// Variance-scaled bias estimation coefficient; `None` keeps `L` static.
    #[serde(default)]
    pub dynamic_bias: Option<f64>,
    /// Pulls every active arm needs before any pruning decision.
    #[serde(default = "default_min_pulls")]
    pub min_pulls: u64,
}

fn default_min_pulls() -> u64 {
    1
}

impl EngineConfig {
    pub fn new(confidence: ConfidenceConfig, policy: PruningPolicy, budget: u64) -> Self {
        EngineConfig {
            confidence,
            policy,
            budget,
            allocation: Allocation::RoundRobin,
            dynamic_bias: None,
            min_pulls: 1,
        }
    }

    pub fn with_policy(&self, policy: PruningPolicy) -> Self {
        EngineConfig {
            policy,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.confidence
            .validate()
            .map_err(|e| e.prefixed("confidence"))?;
        if self.budget < 1 {
            return Err(Error::invalid("budget", "must be at least 1"));
        }
        if self.min_pulls < 1 {
            return Err(Error::invalid("min_pulls", "must be at least 1"));
        }
        if let PruningPolicy::Proportion(a) = self.policy {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::invalid("policy.proportion", "must lie in [0, 1)"));
            }
        }
        if let Some(c) = self.dynamic_bias {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(
                    "dynamic_bias",
                    "coefficient must be positive",
                ));
            }
        }
        Ok(())
    }
}

/// The active set and its statistics at a decision epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierSnapshot {
    pub epoch: u64,
    pub active: Vec<ArmId>,
    /// Aligned with `active`.
    pub stats: Vec<ArmStats>,
}

impl FrontierSnapshot {
    pub fn m_count(&self) -> usize {
        self.active.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneReason {
    Confidence,
    Proportion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneEvent {
    pub epoch: u64,
    pub arm: ArmId,
    pub reason: PruneReason,
}

/// Ground-truth audit of one proportion elimination, for verification only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProportionAudit {
    pub epoch: u64,
    /// Number of arms eliminated, `floor(a |A_t|)`.
    pub eliminated: usize,
    /// Suboptimal arms satisfying the separation gap condition.
    pub distinguishable: usize,
    /// Whether every active arm was inside its radius at this epoch.
    pub concentration_held: bool,
    /// Gap condition plus `eliminated <= distinguishable`.
    pub condition_held: bool,
    pub optimal_eliminated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Budget,
    FrontierCollapse,
}

/// How the pruning rate of a run is normalized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruningRateDef {
    /// Pruned arms over the number of suboptimal arms, `M - 1`.
    #[default]
    SuboptimalArms,
    /// Pruned arms over all arms, `M`.
    AllArms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub selected_arm: ArmId,
    pub selected_true_mu: f64,
    pub optimal_mu: f64,
    pub correct: bool,
    pub total_samples: u64,
    pub epochs: u64,
    pub termination: Termination,
    pub pruning_events: Vec<PruneEvent>,
    /// Arms that were ever part of the frontier.
    pub arms_entered: usize,
    pub max_depth: usize,
    pub final_pulls: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub proportion_audits: Vec<ProportionAudit>,
}

impl RunRecord {
    pub fn pruned(&self) -> usize {
        self.pruning_events.len()
    }

    pub fn pruning_rate(&self, def: PruningRateDef) -> f64 {
        let denom = match def {
            PruningRateDef::SuboptimalArms => self.arms_entered.saturating_sub(1),
            PruningRateDef::AllArms => self.arms_entered,
        };
        if denom == 0 {
            0.0
        } else {
            self.pruned() as f64 / denom as f64
        }
    }

    pub fn suboptimality(&self) -> f64 {
        self.optimal_mu - self.selected_true_mu
    }
}

/// Everything the engine knows at a decision point, after radii are computed.
#[derive(Debug, Clone, Copy)]
pub struct DecisionView<'a> {
    pub epoch: u64,
    pub active: &'a [ArmId],
    /// Indexed by arm id.
    pub stats: &'a [ArmStats],
    /// Full pruning radius per active arm, aligned with `active`.
    pub radii: &'a [f64],
    /// Bias shield included in `radii`.
    pub shield: f64,
}

/// Hook invoked at each decision epoch, before any arm is removed.
pub trait EpochObserver {
    fn on_decision(&mut self, view: &DecisionView<'_>, truth: &dyn GroundTruth);
}

impl EpochObserver for () {
    fn on_decision(&mut self, _view: &DecisionView<'_>, _truth: &dyn GroundTruth) {}
}

/// Lowest-index arm with the highest empirical mean among sampled arms.
pub(crate) fn empirical_best(active: &[ArmId], stats: &[ArmStats]) -> Option<ArmId> {
    let mut best: Option<(ArmId, f64)> = None;
    for &arm in active {
        if let Some(mean) = stats[arm].mean() {
            best = match best {
                Some((b, bm)) if bm > mean || (bm == mean && b < arm) => Some((b, bm)),
                _ => Some((arm, mean)),
            };
        }
    }
    best.map(|(arm, _)| arm)
}
