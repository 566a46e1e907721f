use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rule that maps each arm to a bounded offset on its observation mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasKind {
    Unbiased,
    /// Optimal arm `-L`, every other arm `+L`.
    StaticAdversarial,
    /// Optimal arm `-L`, the `k` best suboptimal arms `+L`, the rest unbiased.
    TopKAdversarial {
        k: usize,
    },
    /// Explicit offsets, one per arm (per sibling position in trees).
    PerArmVector {
        offsets: Vec<f64>,
    },
    /// Fresh offset drawn uniformly from `[-L, L]` on every observation.
    PerStepUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    #[serde(flatten)]
    pub kind: BiasKind,
    /// The bound `L` on every offset.
    #[serde(default)]
    pub bound: f64,
}

impl BiasModel {
    pub fn unbiased() -> Self {
        BiasModel {
            kind: BiasKind::Unbiased,
            bound: 0.0,
        }
    }

    pub fn static_adversarial(bound: f64) -> Self {
        BiasModel {
            kind: BiasKind::StaticAdversarial,
            bound,
        }
    }

    pub fn top_k(bound: f64, k: usize) -> Self {
        BiasModel {
            kind: BiasKind::TopKAdversarial { k },
            bound,
        }
    }

    pub fn per_arm(bound: f64, offsets: Vec<f64>) -> Self {
        BiasModel {
            kind: BiasKind::PerArmVector { offsets },
            bound,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bound >= 0.0 && self.bound.is_finite()) {
            return Err(Error::invalid(
                "bias.bound",
                "must be finite and non-negative",
            ));
        }
        if let BiasKind::PerArmVector { offsets } = &self.kind {
            if let Some(bad) = offsets.iter().find(|o| !(o.abs() <= self.bound)) {
                return Err(Error::invalid(
                    "bias.offsets",
                    format!("offset {bad} exceeds the bias bound {}", self.bound),
                ));
            }
        }
        Ok(())
    }

    /// Whether the model singles out the optimal arm.
    pub fn needs_unique_optimum(&self) -> bool {
        matches!(
            self.kind,
            BiasKind::StaticAdversarial | BiasKind::TopKAdversarial { .. }
        )
    }

    /// Half-width of the per-observation offset draw, if the model has one.
    pub fn per_step_bound(&self) -> Option<f64> {
        match self.kind {
            BiasKind::PerStepUniform if self.bound > 0.0 => Some(self.bound),
            _ => None,
        }
    }

    /// Frozen offsets for a set of arms with the given true means.
    pub fn offsets(&self, means: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        let optimal = optimal_index(means)?;
        if self.needs_unique_optimum() {
            let best = means[optimal];
            if means.iter().filter(|&&m| m == best).count() > 1 {
                return Err(Error::invalid(
                    "instance.means",
                    "bias model requires a unique optimal arm",
                ));
            }
        }
        let l = self.bound;
        let offsets = match &self.kind {
            BiasKind::Unbiased | BiasKind::PerStepUniform => vec![0.0; means.len()],
            BiasKind::StaticAdversarial => (0..means.len())
                .map(|i| if i == optimal { -l } else { l })
                .collect(),
            BiasKind::TopKAdversarial { k } => {
                let mut order: Vec<usize> = (0..means.len()).filter(|&i| i != optimal).collect();
                order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
                let mut offsets = vec![0.0; means.len()];
                offsets[optimal] = -l;
                for &i in order.iter().take(*k) {
                    offsets[i] = l;
                }
                offsets
            }
            BiasKind::PerArmVector { offsets } => {
                if offsets.len() != means.len() {
                    return Err(Error::invalid(
                        "bias.offsets",
                        format!("expected {} offsets, got {}", means.len(), offsets.len()),
                    ));
                }
                offsets.clone()
            }
        };
        Ok(offsets)
    }
}

/// Index of the largest mean; the lowest index wins ties.
pub fn optimal_index(means: &[f64]) -> Result<usize> {
    if means.is_empty() {
        return Err(Error::invalid("instance.means", "must not be empty"));
    }
    if means.iter().any(|m| !m.is_finite()) {
        return Err(Error::invalid("instance.means", "must be finite"));
    }
    let mut best = 0;
    for (i, &m) in means.iter().enumerate().skip(1) {
        if m > means[best] {
            best = i;
        }
    }
    Ok(best)
}
