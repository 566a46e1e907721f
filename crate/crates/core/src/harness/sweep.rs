use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, InstanceSpec, PolicySpec};
use crate::bandit::{Environment, FlatEnv, FlatInstance, TreeEnv};
use crate::confidence::ConfidenceConfig;
use crate::engine::{
    run_baseline_uct, run_engine, EngineConfig, PruningPolicy, PruningRateDef, RunRecord,
};
use crate::error::Result;
use crate::rng::derive_seed;

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// The bound `L` in absolute units.
    pub bias_bound: f64,
    pub sigma: f64,
    pub budget: u64,
    pub radius_factor: f64,
}

impl Cell {
    /// Stable identifier used for seed derivation.
    pub fn key(&self) -> String {
        format!(
            "L={}|sigma={}|N={}|c={}",
            self.bias_bound, self.sigma, self.budget, self.radius_factor
        )
    }

    pub fn with_budget(&self, budget: u64) -> Cell {
        Cell { budget, ..*self }
    }
}

/// One replication as written to the JSON-lines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub cell_key: String,
    pub policy: String,
    pub replication: u64,
    pub seed: u64,
    pub bias_bound: f64,
    pub sigma: f64,
    pub budget: u64,
    pub radius_factor: f64,
    pub record: RunRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Efficiency {
    NotComputed,
    Value(f64),
    /// One of the two policies never reached the target below the ceiling.
    Censored,
}

/// Aggregate over the replications of one (cell, policy) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub policy: String,
    pub bias_bound: f64,
    pub sigma: f64,
    pub budget: u64,
    pub radius_factor: f64,
    pub replications: u64,
    pub pcs: f64,
    pub pcs_stderr: f64,
    pub pruning_rate: f64,
    pub mean_selected_mu: f64,
    pub mean_samples: f64,
    pub efficiency_multiplier: Efficiency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub records: Vec<RecordLine>,
}

impl ExperimentConfig {
    /// Every grid cell in config order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells = Vec::with_capacity(self.cell_count());
        for &l in &self.bias_bounds {
            let bias_bound = self.absolute_bound(l)?;
            for &sigma in &self.sigmas {
                for &budget in &self.budgets {
                    for &radius_factor in &self.radius_factors {
                        cells.push(Cell {
                            bias_bound,
                            sigma,
                            budget,
                            radius_factor,
                        });
                    }
                }
            }
        }
        Ok(cells)
    }

    pub fn engine_config(&self, cell: &Cell, policy: &PolicySpec) -> EngineConfig {
        let confidence = ConfidenceConfig::new(cell.sigma, self.delta)
            .with_bias(cell.bias_bound)
            .with_epsilon(self.epsilon)
            .with_radius_factor(cell.radius_factor);
        let (policy, dynamic_bias) = match *policy {
            PolicySpec::Naive => (PruningPolicy::Naive, None),
            PolicySpec::Uniform => (PruningPolicy::None, None),
            PolicySpec::Proportion { a } => (PruningPolicy::Proportion(a), None),
            PolicySpec::DynamicPac { c_bias } => (PruningPolicy::StrictPac, Some(c_bias)),
            PolicySpec::StrictPac | PolicySpec::Uct { .. } => (PruningPolicy::StrictPac, None),
        };
        EngineConfig {
            confidence,
            policy,
            budget: cell.budget,
            allocation: self.allocation,
            dynamic_bias,
            min_pulls: self.min_pulls,
        }
    }
}

/// Instance shared by all replications of a flat cell.
pub(crate) fn flat_instance(
    config: &ExperimentConfig,
    cell: &Cell,
) -> Result<Option<Arc<FlatInstance>>> {
    match config.instance.layout() {
        Some(layout) => {
            let bias = config.environment_bias(cell.bias_bound);
            Ok(Some(Arc::new(FlatInstance::new(
                &layout, &bias, cell.sigma,
            )?)))
        }
        None => Ok(None),
    }
}

fn dispatch<E: Environment>(
    env: &mut E,
    config: &ExperimentConfig,
    cell: &Cell,
    policy: &PolicySpec,
) -> Result<RunRecord> {
    match *policy {
        PolicySpec::Uct { exploration } => {
            run_baseline_uct(env, cell.budget, exploration.unwrap_or(cell.sigma))
        }
        _ => run_engine(env, &config.engine_config(cell, policy), &mut ()),
    }
}

pub(crate) fn run_replication(
    config: &ExperimentConfig,
    cell: &Cell,
    flat: Option<&Arc<FlatInstance>>,
    policy: &PolicySpec,
    replication: u64,
) -> Result<RecordLine> {
    let cell_key = cell.key();
    let seed = derive_seed(config.base_seed, &cell_key, replication);
    let record = match (&config.instance, flat) {
        (_, Some(instance)) => {
            let mut env = FlatEnv::new(instance.clone(), seed);
            dispatch(&mut env, config, cell, policy)?
        }
        (InstanceSpec::Tree(spec), None) => {
            let bias = config.environment_bias(cell.bias_bound);
            let mut env = TreeEnv::new(spec.clone(), bias, cell.sigma, seed)?;
            dispatch(&mut env, config, cell, policy)?
        }
        _ => unreachable!("flat instances are prepared per cell"),
    };
    Ok(RecordLine {
        cell_key,
        policy: policy.label(),
        replication,
        seed,
        bias_bound: cell.bias_bound,
        sigma: cell.sigma,
        budget: cell.budget,
        radius_factor: cell.radius_factor,
        record,
    })
}

/// All replications of one policy in one cell, in replication order.
pub fn run_cell_policy(
    config: &ExperimentConfig,
    cell: &Cell,
    policy: &PolicySpec,
) -> Result<Vec<RecordLine>> {
    let flat = flat_instance(config, cell)?;
    (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, cell, flat.as_ref(), policy, r))
        .collect()
}

/// Run every (cell, policy, replication) and aggregate.
///
/// Work is spread over the current rayon pool; output order is fixed by the
/// config, so results are identical for any worker count.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let cells = config.cells()?;
    let flats = cells
        .iter()
        .map(|c| flat_instance(config, c))
        .collect::<Result<Vec<_>>>()?;
    let reps = config.replications;
    let per_cell = config.policies.len() as u64 * reps;
    let total = cells.len() as u64 * per_cell;

    let records = (0..total)
        .into_par_iter()
        .map(|task| {
            let c = (task / per_cell) as usize;
            let p = ((task % per_cell) / reps) as usize;
            let r = task % reps;
            run_replication(config, &cells[c], flats[c].as_ref(), &config.policies[p], r)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = aggregate_records(&records, config.pruning_rate);
    if config.efficiency.is_some() {
        let mut reference_cache = HashMap::new();
        let mut i = 0;
        for cell in &cells {
            for policy in &config.policies {
                rows[i].efficiency_multiplier = super::studies::efficiency_with_cache(
                    config,
                    cell,
                    policy,
                    &mut reference_cache,
                )?;
                i += 1;
            }
        }
    }
    Ok(SweepResult { rows, records })
}

/// Rebuild the aggregate rows from raw records.
///
/// Rows come out in order of first appearance of each (cell, policy) pair.
/// The efficiency column is not recoverable from records and is left unset.
pub fn aggregate_records(records: &[RecordLine], def: PruningRateDef) -> Vec<SweepRow> {
    #[derive(Default)]
    struct Acc {
        n: u64,
        correct: u64,
        pruning: f64,
        mu: f64,
        samples: f64,
    }
    let mut order: Vec<(&str, &str)> = Vec::new();
    let mut groups: HashMap<(&str, &str), (Acc, &RecordLine)> = HashMap::new();
    for line in records {
        let key = (line.cell_key.as_str(), line.policy.as_str());
        let (acc, _) = groups.entry(key).or_insert_with(|| {
            order.push(key);
            (Acc::default(), line)
        });
        acc.n += 1;
        acc.correct += line.record.correct as u64;
        acc.pruning += line.record.pruning_rate(def);
        acc.mu += line.record.selected_true_mu;
        acc.samples += line.record.total_samples as f64;
    }
    order
        .into_iter()
        .map(|key| {
            let (acc, first) = &groups[&key];
            let n = acc.n as f64;
            let pcs = acc.correct as f64 / n;
            SweepRow {
                policy: first.policy.clone(),
                bias_bound: first.bias_bound,
                sigma: first.sigma,
                budget: first.budget,
                radius_factor: first.radius_factor,
                replications: acc.n,
                pcs,
                pcs_stderr: (pcs * (1.0 - pcs) / n).sqrt(),
                pruning_rate: acc.pruning / n,
                mean_selected_mu: acc.mu / n,
                mean_samples: acc.samples / n,
                efficiency_multiplier: Efficiency::NotComputed,
            }
        })
        .collect()
}
