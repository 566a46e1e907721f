//! Brute-force and Monte-Carlo checks of the confidence bounds and the
//! pruning rules. Everything here may look at ground truth.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{optimal_index, ArmLayout, BiasModel, FlatEnv, FlatInstance, GroundTruth};
use crate::confidence::{
    sample_complexity_lambert, sample_complexity_upper, ComplexityInputs, ConfidenceConfig,
    SampleBound,
};
use crate::engine::{run_engine, DecisionView, EngineConfig, EpochObserver, PruningPolicy};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};

/// Outcome of the uniform-in-time concentration experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub trials: u64,
    pub horizon: u64,
    pub m_count: usize,
    /// Trajectories where some arm left its radius at some sample count.
    pub violations: u64,
    pub rate: f64,
    pub delta: f64,
    /// `delta + 3 sqrt(delta (1 - delta) / trials)`.
    pub allowance: f64,
    pub passed: bool,
}

/// Simulate `trials` trajectories of `m_count` arms under frozen worst-case
/// offsets and count those leaving `u_stat(n, M) + L` at any `n <= horizon`.
///
/// Arm 0 carries offset `-L`, every other arm `+L`; the true means are zero.
pub fn verify_concentration(
    config: &ConfidenceConfig,
    m_count: usize,
    horizon: u64,
    trials: u64,
    seed: u64,
) -> Result<CoverageReport> {
    config.validate()?;
    if m_count < 1 {
        return Err(Error::invalid("m_count", "must be at least 1"));
    }
    if horizon < 1 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    if trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let l = config.bias_bound;
    let radius: Vec<f64> = (1..=horizon)
        .map(|n| config.stat_radius(n, m_count) + l)
        .collect();
    let sigma = config.sigma;

    let violated = |trial: u64| -> bool {
        let mut rng = stream(derive_seed(seed, "coverage", trial));
        for arm in 0..m_count {
            let offset = if arm == 0 { -l } else { l };
            let mut noise = 0.0;
            for (i, r) in radius.iter().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                noise += z;
                if (offset + sigma * noise / (i + 1) as f64).abs() > *r {
                    return true;
                }
            }
        }
        false
    };
    let violations = (0..trials).into_par_iter().filter(|&t| violated(t)).count() as u64;

    let rate = violations as f64 / trials as f64;
    let delta = config.delta;
    let allowance = delta + 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt();
    Ok(CoverageReport {
        trials,
        horizon,
        m_count,
        violations,
        rate,
        delta,
        allowance,
        passed: rate <= allowance,
    })
}

/// A small flat instance replayed over a grid of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyReplaySpec {
    pub means: Vec<f64>,
    pub bias: BiasModel,
    pub sigma: f64,
    pub delta: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub radius_factor: f64,
    pub budget: u64,
    pub seeds: u64,
    #[serde(default)]
    pub base_seed: u64,
    /// Fraction eliminated per pass by the proportion policy.
    pub proportion: f64,
    /// Pulls per arm before the proportion policy first eliminates.
    #[serde(default = "one_pull")]
    pub proportion_min_pulls: u64,
}

fn one_pull() -> u64 {
    1
}

fn one() -> f64 {
    1.0
}

impl SafetyReplaySpec {
    pub fn validate(&self) -> Result<()> {
        if self.means.len() < 2 || self.means.len() > 4 {
            return Err(Error::invalid("means", "replay instances have 2 to 4 arms"));
        }
        if self.budget > 60 {
            return Err(Error::invalid("budget", "replay budget is at most 60"));
        }
        if self.seeds < 1 {
            return Err(Error::invalid("seeds", "must be at least 1"));
        }
        optimal_index(&self.means)?;
        Ok(())
    }

    fn engine_config(&self, policy: PruningPolicy) -> EngineConfig {
        let confidence = ConfidenceConfig::new(self.sigma, self.delta)
            .with_bias(self.bias.bound)
            .with_epsilon(self.epsilon)
            .with_radius_factor(self.radius_factor);
        EngineConfig::new(confidence, policy, self.budget)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StrictSafety {
    pub replays: u64,
    /// Replays where every arm stayed inside its radius at every epoch.
    pub event_held: u64,
    pub optimal_pruned: u64,
    pub optimal_pruned_under_event: u64,
    pub replays_with_pruning: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProportionSafety {
    pub replays: u64,
    pub elimination_epochs: u64,
    /// Epochs where the concentration event and the gap-and-cardinality
    /// condition both held.
    pub condition_held: u64,
    /// Epochs where the cardinality part failed (`K > |M_bad|`).
    pub cardinality_violations: u64,
    pub optimal_eliminated: u64,
    pub optimal_eliminated_when_held: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub spec: SafetyReplaySpec,
    pub strict: StrictSafety,
    pub proportion: ProportionSafety,
    pub passed: bool,
}

/// Tracks whether every active arm stays within `u_stat + L` of its true mean.
struct EventWatch {
    held: bool,
    config: ConfidenceConfig,
}

impl EpochObserver for EventWatch {
    fn on_decision(&mut self, view: &DecisionView<'_>, truth: &dyn GroundTruth) {
        if !self.held {
            return;
        }
        let m = view.active.len();
        self.held = view.active.iter().all(|&arm| {
            let s = &view.stats[arm];
            let b = s.sum / s.pulls as f64;
            let r = self.config.stat_radius(s.pulls, m) + self.config.bias_bound;
            (b - truth.true_mean(arm)).abs() <= r
        });
    }
}

/// Replay the strict and proportion policies over every seed in the grid.
pub fn verify_safe_pruning_exhaustive(spec: &SafetyReplaySpec) -> Result<SafetyReport> {
    spec.validate()?;
    let instance = Arc::new(FlatInstance::new(
        &ArmLayout::Means(spec.means.clone()),
        &spec.bias,
        spec.sigma,
    )?);
    let strict_cfg = spec.engine_config(PruningPolicy::StrictPac);
    let mut prop_cfg = spec.engine_config(PruningPolicy::Proportion(spec.proportion));
    prop_cfg.min_pulls = spec.proportion_min_pulls;
    strict_cfg.validate()?;
    prop_cfg.validate()?;
    let star = instance.optimal;

    let replay = |i: u64| -> Result<(StrictSafety, ProportionSafety)> {
        let seed = derive_seed(spec.base_seed, "safety", i);
        let mut watch = EventWatch {
            held: true,
            config: strict_cfg.confidence,
        };
        let mut env = FlatEnv::new(instance.clone(), seed);
        let rec = run_engine(&mut env, &strict_cfg, &mut watch)?;
        let pruned_star = rec.pruning_events.iter().any(|e| e.arm == star);
        let strict = StrictSafety {
            replays: 1,
            event_held: watch.held as u64,
            optimal_pruned: pruned_star as u64,
            optimal_pruned_under_event: (pruned_star && watch.held) as u64,
            replays_with_pruning: (rec.pruned() > 0) as u64,
        };

        let mut env = FlatEnv::new(instance.clone(), seed);
        let rec = run_engine(&mut env, &prop_cfg, &mut ())?;
        let mut prop = ProportionSafety {
            replays: 1,
            ..Default::default()
        };
        for audit in &rec.proportion_audits {
            let held = audit.concentration_held && audit.condition_held;
            prop.elimination_epochs += 1;
            prop.condition_held += held as u64;
            prop.cardinality_violations += (audit.eliminated > audit.distinguishable) as u64;
            prop.optimal_eliminated += audit.optimal_eliminated as u64;
            prop.optimal_eliminated_when_held += (held && audit.optimal_eliminated) as u64;
        }
        Ok((strict, prop))
    };

    let parts = (0..spec.seeds)
        .into_par_iter()
        .map(replay)
        .collect::<Result<Vec<_>>>()?;
    let mut strict = StrictSafety::default();
    let mut proportion = ProportionSafety::default();
    for (s, p) in parts {
        strict.replays += s.replays;
        strict.event_held += s.event_held;
        strict.optimal_pruned += s.optimal_pruned;
        strict.optimal_pruned_under_event += s.optimal_pruned_under_event;
        strict.replays_with_pruning += s.replays_with_pruning;
        proportion.replays += p.replays;
        proportion.elimination_epochs += p.elimination_epochs;
        proportion.condition_held += p.condition_held;
        proportion.cardinality_violations += p.cardinality_violations;
        proportion.optimal_eliminated += p.optimal_eliminated;
        proportion.optimal_eliminated_when_held += p.optimal_eliminated_when_held;
    }
    let passed =
        strict.optimal_pruned_under_event == 0 && proportion.optimal_eliminated_when_held == 0;
    Ok(SafetyReport {
        spec: spec.clone(),
        strict,
        proportion,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub trials: u64,
    /// Random draws discarded because the Lambert argument left its domain.
    pub rejected_draws: u64,
    pub minimality_failures: u64,
    pub solver_disagreements: u64,
    pub max_solver_gap: u64,
    pub passed: bool,
}

/// Draw a random feasible input whose Lambert argument lies in `(-1/e, 0)`.
///
/// Returns the input and the number of rejected draws.
pub fn random_feasible_inputs<R: Rng>(rng: &mut R) -> (ComplexityInputs, u64) {
    let mut rejected = 0;
    loop {
        let gap = 10f64.powf(rng.random_range(-2.0..1.0));
        let bias = gap / 4.0 * rng.random_range(0.0..0.95);
        let epsilon = (gap - 4.0 * bias) * rng.random_range(0.0..0.9);
        let sigma = 10f64.powf(rng.random_range(-1.5..1.0));
        let delta = 10f64.powf(rng.random_range(-4.0..-0.31));
        let factor = rng.random_range(0.2..1.5);
        let frontier = rng.random_range(2..=500);
        let config = ConfidenceConfig::new(sigma, delta)
            .with_bias(bias)
            .with_epsilon(epsilon)
            .with_radius_factor(factor);
        let inputs = ComplexityInputs::new(gap, frontier, config);
        if inputs.separation_margin() <= 0.0 {
            rejected += 1;
            continue;
        }
        let arg = -1.0 / (2.0 * inputs.c2() * inputs.c1().sqrt());
        if arg > -1.0 / std::f64::consts::E && arg < 0.0 {
            return (inputs, rejected);
        }
        rejected += 1;
    }
}

/// Check that `n*` is the first sample count passing the separation test and
/// that both solvers agree within one sample.
pub fn check_minimality(inputs: &ComplexityInputs) -> Result<(bool, u64)> {
    let n = match sample_complexity_upper(inputs)? {
        SampleBound::Finite(n) => n,
        SampleBound::Infeasible => return Ok((false, 0)),
    };
    let margin = inputs.separation_margin();
    let m = inputs.frontier_size;
    let cfg = &inputs.config;
    let passes = 4.0 * cfg.stat_radius(n, m) < margin;
    let prev_fails = n <= inputs.monotone_from() || 4.0 * cfg.stat_radius(n - 1, m) >= margin;
    let gap = match sample_complexity_lambert(inputs)? {
        SampleBound::Finite(w) => w.abs_diff(n),
        SampleBound::Infeasible => u64::MAX,
    };
    Ok((passes && prev_fails, gap))
}

pub fn verify_complexity_minimality(trials: u64, seed: u64) -> Result<MinimalityReport> {
    let mut rng = stream(derive_seed(seed, "minimality", 0));
    let mut report = MinimalityReport {
        trials,
        rejected_draws: 0,
        minimality_failures: 0,
        solver_disagreements: 0,
        max_solver_gap: 0,
        passed: false,
    };
    for _ in 0..trials {
        let (inputs, rejected) = random_feasible_inputs(&mut rng);
        report.rejected_draws += rejected;
        let (minimal, gap) = check_minimality(&inputs)?;
        report.minimality_failures += (!minimal) as u64;
        report.solver_disagreements += (gap > 1) as u64;
        report.max_solver_gap = report.max_solver_gap.max(gap);
    }
    report.passed = report.minimality_failures == 0 && report.solver_disagreements == 0;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageSpec {
    pub sigma: f64,
    pub delta: f64,
    pub bias_bound: f64,
    #[serde(default = "one")]
    pub radius_factor: f64,
    pub m_count: usize,
    pub horizon: u64,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimalitySpec {
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

/// The checks run by the `verify` command. Missing sections are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySuite {
    #[serde(default)]
    pub coverage: Option<CoverageSpec>,
    #[serde(default)]
    pub safety: Option<SafetyReplaySpec>,
    #[serde(default)]
    pub minimality: Option<MinimalitySpec>,
}

impl Default for VerifySuite {
    fn default() -> Self {
        VerifySuite {
            coverage: Some(CoverageSpec {
                sigma: 0.3,
                delta: 0.05,
                bias_bound: 0.1,
                radius_factor: 1.0,
                m_count: 10,
                horizon: 1000,
                trials: 10_000,
                seed: 0,
            }),
            safety: Some(SafetyReplaySpec {
                means: vec![1.0, 0.0, 0.0, 0.0],
                bias: BiasModel::static_adversarial(0.1),
                sigma: 0.2,
                delta: 0.05,
                epsilon: 0.0,
                radius_factor: 1.0,
                budget: 60,
                seeds: 10_000,
                base_seed: 0,
                proportion: 0.3,
                proportion_min_pulls: 8,
            }),
            minimality: Some(MinimalitySpec {
                trials: 1000,
                seed: 0,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub coverage: Option<CoverageReport>,
    pub safety: Option<SafetyReport>,
    pub minimality: Option<MinimalityReport>,
    /// Names of the failed checks.
    pub failures: Vec<String>,
    pub passed: bool,
}

impl VerifySuite {
    pub fn from_json(text: &str) -> Result<Self> {
        let suite: VerifySuite = serde_json::from_str(text)?;
        suite.validate()?;
        Ok(suite)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = &self.coverage {
            ConfidenceConfig::new(c.sigma, c.delta)
                .with_bias(c.bias_bound)
                .with_radius_factor(c.radius_factor)
                .validate()
                .map_err(|e| e.prefixed("coverage"))?;
        }
        if let Some(s) = &self.safety {
            s.validate().map_err(|e| e.prefixed("safety"))?;
        }
        Ok(())
    }

    pub fn run(&self) -> Result<VerifyReport> {
        let mut failures = Vec::new();
        let coverage = match &self.coverage {
            Some(c) => {
                let cfg = ConfidenceConfig::new(c.sigma, c.delta)
                    .with_bias(c.bias_bound)
                    .with_radius_factor(c.radius_factor);
                let r = verify_concentration(&cfg, c.m_count, c.horizon, c.trials, c.seed)?;
                if !r.passed {
                    failures.push("coverage".to_string());
                }
                Some(r)
            }
            None => None,
        };
        let safety = match &self.safety {
            Some(s) => {
                let r = verify_safe_pruning_exhaustive(s)?;
                if !r.passed {
                    failures.push("safety".to_string());
                }
                Some(r)
            }
            None => None,
        };
        let minimality = match &self.minimality {
            Some(m) => {
                let r = verify_complexity_minimality(m.trials, m.seed)?;
                if !r.passed {
                    failures.push("minimality".to_string());
                }
                Some(r)
            }
            None => None,
        };
        Ok(VerifyReport {
            passed: failures.is_empty(),
            coverage,
            safety,
            minimality,
            failures,
        })
    }
}
