use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{optimal_index, ArmId, ArmTruth, BiasModel, Environment, GroundTruth};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// How the true means of a flat instance are laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmLayout {
    /// Arm 0 at `baseline + gap`, every other arm at `baseline`.
    SingleGap {
        arms: usize,
        gap: f64,
        baseline: f64,
    },
    /// Explicit true means.
    Means(Vec<f64>),
}

impl ArmLayout {
    pub fn single_gap(arms: usize, gap: f64) -> Self {
        ArmLayout::SingleGap {
            arms,
            gap,
            baseline: 0.0,
        }
    }

    pub fn means(&self) -> Result<Vec<f64>> {
        match *self {
            ArmLayout::SingleGap {
                arms,
                gap,
                baseline,
            } => {
                if arms < 2 {
                    return Err(Error::invalid("instance.arms", "must be at least 2"));
                }
                if !(gap > 0.0 && gap.is_finite()) {
                    return Err(Error::invalid(
                        "instance.gap",
                        "must be finite and positive",
                    ));
                }
                if !baseline.is_finite() {
                    return Err(Error::invalid("instance.baseline", "must be finite"));
                }
                let mut means = vec![baseline; arms];
                means[0] = baseline + gap;
                Ok(means)
            }
            ArmLayout::Means(ref means) => {
                if means.len() < 2 {
                    return Err(Error::invalid("instance.means", "need at least 2 arms"));
                }
                Ok(means.clone())
            }
        }
    }
}

/// Immutable description of a flat best-arm instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatInstance {
    pub means: Vec<f64>,
    pub offsets: Vec<f64>,
    pub sigma: f64,
    pub optimal: ArmId,
    /// Half-width of per-observation uniform offsets, when enabled.
    pub per_step_bound: Option<f64>,
}

impl FlatInstance {
    pub fn new(layout: &ArmLayout, bias: &BiasModel, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and non-negative"));
        }
        let means = layout.means()?;
        let offsets = bias.offsets(&means)?;
        let optimal = optimal_index(&means)?;
        Ok(FlatInstance {
            means,
            offsets,
            sigma,
            optimal,
            per_step_bound: bias.per_step_bound(),
        })
    }

    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn truths(&self) -> Vec<ArmTruth> {
        self.means
            .iter()
            .enumerate()
            .map(|(arm_id, &mu)| ArmTruth { arm_id, mu })
            .collect()
    }

    /// Mean of the observation distribution of `arm`.
    pub fn observation_mean(&self, arm: ArmId) -> f64 {
        self.means[arm] + self.offsets[arm]
    }

    /// Multiply every mean, offset and the noise scale by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        FlatInstance {
            means: self.means.iter().map(|m| m * k).collect(),
            offsets: self.offsets.iter().map(|o| o * k).collect(),
            sigma: self.sigma * k,
            optimal: self.optimal,
            per_step_bound: self.per_step_bound.map(|b| b * k),
        }
    }
}

/// A flat instance plus the replication's random stream.
#[derive(Debug, Clone)]
pub struct FlatEnv {
    instance: Arc<FlatInstance>,
    rng: Stream,
}

impl FlatEnv {
    pub fn new(instance: Arc<FlatInstance>, seed: u64) -> Self {
        FlatEnv {
            instance,
            rng: stream(seed),
        }
    }

    pub fn instance(&self) -> &FlatInstance {
        &self.instance
    }
}

/// Build a single-gap (or explicit-means) instance with frozen bias offsets.
pub fn make_flat_instance(
    layout: &ArmLayout,
    bias: &BiasModel,
    sigma: f64,
    seed: u64,
) -> Result<FlatEnv> {
    Ok(FlatEnv::new(
        Arc::new(FlatInstance::new(layout, bias, sigma)?),
        seed,
    ))
}

impl GroundTruth for FlatEnv {
    fn true_mean(&self, arm: ArmId) -> f64 {
        self.instance.means[arm]
    }

    fn bias_offset(&self, arm: ArmId) -> f64 {
        self.instance.offsets[arm]
    }

    fn is_optimal(&self, arm: ArmId) -> bool {
        arm == self.instance.optimal
    }

    fn optimal_mean(&self) -> f64 {
        self.instance.means[self.instance.optimal]
    }
}

impl Environment for FlatEnv {
    fn initial_frontier(&self) -> Vec<ArmId> {
        (0..self.instance.arms()).collect()
    }

    fn arm_count(&self) -> usize {
        self.instance.arms()
    }

    fn depth(&self, _arm: ArmId) -> usize {
        0
    }

    fn is_expandable(&self, _arm: ArmId) -> bool {
        false
    }

    fn expand(&mut self, arm: ArmId) -> Result<Vec<ArmId>> {
        Err(Error::NotExpandable(arm))
    }

    fn sample(&mut self, arm: ArmId) -> Result<f64> {
        let inst = &*self.instance;
        if arm >= inst.arms() {
            return Err(Error::UnknownArm(arm));
        }
        let mut center = inst.means[arm] + inst.offsets[arm];
        if let Some(b) = inst.per_step_bound {
            center += self.rng.random_range(-b..=b);
        }
        let z: f64 = self.rng.sample(StandardNormal);
        Ok(center + inst.sigma * z)
    }
}
