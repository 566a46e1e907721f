use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ArmId, BiasModel, Environment, GroundTruth};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// Synthetic expansion tree with one strictly best child per sibling set.
///
/// A child on the designated index has value `gamma * parent`; its siblings
/// have `gamma * parent - gap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    pub branching: usize,
    pub depth: usize,
    pub gap: f64,
    /// Designated child index per level. Empty means child 0 everywhere.
    #[serde(default)]
    pub optimal_path: Vec<usize>,
    #[serde(default = "one")]
    pub depth_discount: f64,
    #[serde(default = "one")]
    pub root_value: f64,
}

fn one() -> f64 {
    1.0
}

impl TreeSpec {
    pub fn new(branching: usize, depth: usize, gap: f64) -> Self {
        TreeSpec {
            branching,
            depth,
            gap,
            optimal_path: Vec::new(),
            depth_discount: 1.0,
            root_value: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.branching < 2 {
            return Err(Error::invalid("instance.branching", "must be at least 2"));
        }
        if self.depth < 1 {
            return Err(Error::invalid("instance.depth", "must be at least 1"));
        }
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return Err(Error::invalid(
                "instance.gap",
                "must be finite and positive",
            ));
        }
        if !(self.depth_discount > 0.0 && self.depth_discount <= 1.0) {
            return Err(Error::invalid(
                "instance.depth_discount",
                "must lie in (0, 1]",
            ));
        }
        if !self.root_value.is_finite() {
            return Err(Error::invalid("instance.root_value", "must be finite"));
        }
        if !self.optimal_path.is_empty() && self.optimal_path.len() != self.depth {
            return Err(Error::invalid(
                "instance.optimal_path",
                "needs one index per level",
            ));
        }
        if self.optimal_path.iter().any(|&c| c >= self.branching) {
            return Err(Error::invalid(
                "instance.optimal_path",
                "index exceeds branching",
            ));
        }
        Ok(())
    }

    /// Designated child index at `level` (0 = children of the root).
    pub fn designated(&self, level: usize) -> usize {
        self.optimal_path.get(level).copied().unwrap_or(0)
    }

    pub fn child_value(&self, parent_value: f64, level: usize, child: usize) -> f64 {
        let v = self.depth_discount * parent_value;
        if child == self.designated(level) {
            v
        } else {
            v - self.gap
        }
    }

    /// Value of the best leaf, `gamma^depth * root`.
    pub fn optimal_leaf_value(&self) -> f64 {
        self.root_value * self.depth_discount.powi(self.depth as i32)
    }
}

#[derive(Debug, Clone)]
struct Node {
    depth: usize,
    value: f64,
    offset: f64,
    on_path: bool,
    expanded: bool,
}

/// Lazily materialized tree environment.
#[derive(Debug, Clone)]
pub struct TreeEnv {
    spec: TreeSpec,
    bias: BiasModel,
    sigma: f64,
    nodes: Vec<Node>,
    rng: Stream,
}

impl TreeEnv {
    pub fn new(spec: TreeSpec, bias: BiasModel, sigma: f64, seed: u64) -> Result<Self> {
        spec.validate()?;
        bias.validate()?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and non-negative"));
        }
        // Check per-sibling offsets once up front.
        let probe: Vec<f64> = (0..spec.branching)
            .map(|c| spec.child_value(spec.root_value, 0, c))
            .collect();
        bias.offsets(&probe)?;
        let root = Node {
            depth: 0,
            value: spec.root_value,
            offset: 0.0,
            on_path: true,
            expanded: false,
        };
        Ok(TreeEnv {
            spec,
            bias,
            sigma,
            nodes: vec![root],
            rng: stream(seed),
        })
    }

    pub fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    pub fn value(&self, arm: ArmId) -> f64 {
        self.nodes[arm].value
    }

    fn node(&self, arm: ArmId) -> Result<&Node> {
        self.nodes.get(arm).ok_or(Error::UnknownArm(arm))
    }
}

impl GroundTruth for TreeEnv {
    fn true_mean(&self, arm: ArmId) -> f64 {
        self.nodes[arm].value
    }

    fn bias_offset(&self, arm: ArmId) -> f64 {
        self.nodes[arm].offset
    }

    fn is_optimal(&self, arm: ArmId) -> bool {
        self.nodes[arm].on_path
    }

    fn optimal_mean(&self) -> f64 {
        self.spec.optimal_leaf_value()
    }
}

impl Environment for TreeEnv {
    fn initial_frontier(&self) -> Vec<ArmId> {
        vec![0]
    }

    fn arm_count(&self) -> usize {
        self.nodes.len()
    }

    fn depth(&self, arm: ArmId) -> usize {
        self.nodes[arm].depth
    }

    fn is_expandable(&self, arm: ArmId) -> bool {
        self.nodes
            .get(arm)
            .is_some_and(|n| !n.expanded && n.depth < self.spec.depth)
    }

    fn expand(&mut self, arm: ArmId) -> Result<Vec<ArmId>> {
        let parent = self.node(arm)?.clone();
        if parent.expanded || parent.depth >= self.spec.depth {
            return Err(Error::NotExpandable(arm));
        }
        let level = parent.depth;
        let values: Vec<f64> = (0..self.spec.branching)
            .map(|c| self.spec.child_value(parent.value, level, c))
            .collect();
        let offsets = self.bias.offsets(&values)?;
        let designated = self.spec.designated(level);
        self.nodes[arm].expanded = true;
        let first = self.nodes.len();
        for (c, (&value, &offset)) in values.iter().zip(&offsets).enumerate() {
            self.nodes.push(Node {
                depth: level + 1,
                value,
                offset,
                on_path: parent.on_path && c == designated,
                expanded: false,
            });
        }
        Ok((first..self.nodes.len()).collect())
    }

    fn sample(&mut self, arm: ArmId) -> Result<f64> {
        let node = self.node(arm)?;
        let mut center = node.value + node.offset;
        if let Some(b) = self.bias.per_step_bound() {
            center += self.rng.random_range(-b..=b);
        }
        let z: f64 = self.rng.sample(StandardNormal);
        Ok(center + self.sigma * z)
    }
}
