//! Ground-truth arm models, bias injection, and the seeded observation
//! generator.
//!
//! An observation of arm `m` is `mu_m + offset_m + sigma * z` with `z` drawn
//! from the replication's own stream. Offsets are frozen when the instance
//! is built unless the bias model draws them per observation.

mod bias;
mod flat;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use bias::{optimal_index, BiasKind, BiasModel};
pub use flat::{make_flat_instance, ArmLayout, FlatEnv, FlatInstance};
pub use tree::{TreeEnv, TreeSpec};

pub type ArmId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmTruth {
    pub arm_id: ArmId,
    pub mu: f64,
}

/// Running empirical state of one arm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub pulls: u64,
    pub sum: f64,
}

impl ArmStats {
    pub fn record(&mut self, value: f64) {
        self.pulls += 1;
        self.sum += value;
    }

    /// Empirical mean, undefined before the first pull.
    pub fn mean(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.sum / self.pulls as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub arm_id: ArmId,
    pub value: f64,
    pub epoch: u64,
}

/// Ground truth visible to oracles and audits, never to pruning decisions.
pub trait GroundTruth {
    fn true_mean(&self, arm: ArmId) -> f64;
    fn bias_offset(&self, arm: ArmId) -> f64;
    /// Whether `arm` is the optimal arm (flat) or lies on the optimal path (tree).
    fn is_optimal(&self, arm: ArmId) -> bool;
    /// Value of the best reachable arm.
    fn optimal_mean(&self) -> f64;
}

/// A sampling environment over a (possibly expanding) set of arms.
pub trait Environment: GroundTruth {
    fn initial_frontier(&self) -> Vec<ArmId>;
    /// Number of arms created so far.
    fn arm_count(&self) -> usize;
    fn depth(&self, arm: ArmId) -> usize;
    fn is_expandable(&self, arm: ArmId) -> bool;
    /// Replace `arm` by its children, returned with zero pulls.
    fn expand(&mut self, arm: ArmId) -> Result<Vec<ArmId>>;
    /// Draw one observation value, advancing the stream.
    fn sample(&mut self, arm: ArmId) -> Result<f64>;

    fn observe(&mut self, arm: ArmId, epoch: u64) -> Result<Observation> {
        Ok(Observation {
            arm_id: arm,
            value: self.sample(arm)?,
            epoch,
        })
    }
}
