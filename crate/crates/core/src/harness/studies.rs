use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{flat_instance, run_replication};
use super::{run_sweep, Cell, Efficiency, ExperimentConfig, PolicySpec};
use crate::error::{Error, Result};

fn pcs_at(config: &ExperimentConfig, cell: &Cell, policy: &PolicySpec) -> Result<f64> {
    let flat = flat_instance(config, cell)?;
    let correct = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, cell, flat.as_ref(), policy, r).map(|l| l.record.correct))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&c| c)
        .count();
    Ok(correct as f64 / config.replications as f64)
}

/// Smallest budget on a doubling-then-bisection schedule at which `policy`
/// reaches `target` PCS, or `None` if it does not by `ceiling`.
pub fn budget_to_target(
    config: &ExperimentConfig,
    cell: &Cell,
    policy: &PolicySpec,
    target: f64,
    base: u64,
    ceiling: u64,
) -> Result<Option<u64>> {
    let reaches = |n: u64| pcs_at(config, &cell.with_budget(n), policy).map(|p| p >= target);
    let mut lo = None;
    let mut hi = base.max(1);
    loop {
        if reaches(hi)? {
            break;
        }
        if hi >= ceiling {
            return Ok(None);
        }
        lo = Some(hi);
        hi = (hi * 2).min(ceiling);
    }
    let Some(mut lo) = lo else {
        return Ok(Some(hi));
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// `N_reference(target) / N_policy(target)` for one cell.
pub fn efficiency_multiplier(
    config: &ExperimentConfig,
    cell: &Cell,
    policy: &PolicySpec,
) -> Result<Efficiency> {
    efficiency_with_cache(config, cell, policy, &mut HashMap::new())
}

pub(crate) fn efficiency_with_cache(
    config: &ExperimentConfig,
    cell: &Cell,
    policy: &PolicySpec,
    cache: &mut HashMap<String, Option<u64>>,
) -> Result<Efficiency> {
    let spec = config.efficiency.clone().unwrap_or_default();
    let base = spec
        .base_budget
        .unwrap_or(config.instance.frontier_size() as u64);
    let ceiling = base.saturating_mul(spec.ceiling_factor);
    // The searched budget replaces the cell's own budget.
    let key = cell.with_budget(0).key();
    let reference = match cache.get(&key) {
        Some(n) => *n,
        None => {
            let n = budget_to_target(config, cell, &spec.reference, spec.target, base, ceiling)?;
            cache.insert(key, n);
            n
        }
    };
    let own = if *policy == spec.reference {
        reference
    } else {
        budget_to_target(config, cell, policy, spec.target, base, ceiling)?
    };
    Ok(match (reference, own) {
        (Some(r), Some(p)) => Efficiency::Value(r as f64 / p as f64),
        _ => Efficiency::Censored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub budget: u64,
    pub pcs: f64,
    pub pcs_stderr: f64,
}

fn single(field: &str, len: usize, study: &str) -> Result<()> {
    if len != 1 {
        return Err(Error::invalid(
            field,
            format!("{study} needs exactly one value"),
        ));
    }
    Ok(())
}

/// PCS of the first policy at every budget in the grid.
pub fn scaling_curve(config: &ExperimentConfig) -> Result<Vec<ScalingPoint>> {
    single("bias_bounds", config.bias_bounds.len(), "a scaling curve")?;
    single("sigmas", config.sigmas.len(), "a scaling curve")?;
    single(
        "radius_factors",
        config.radius_factors.len(),
        "a scaling curve",
    )?;
    let mut c = config.clone();
    c.policies.truncate(1);
    c.efficiency = None;
    Ok(run_sweep(&c)?
        .rows
        .into_iter()
        .map(|r| ScalingPoint {
            budget: r.budget,
            pcs: r.pcs,
            pcs_stderr: r.pcs_stderr,
        })
        .collect())
}

/// Outcome of one evaluator-quality profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationRow {
    pub bias_bound: f64,
    pub replications: u64,
    pub pcs: f64,
    pub pcs_stderr: f64,
    pub mean_selected_mu: f64,
    /// `4 L + epsilon`.
    pub cap: f64,
    /// Runs whose selected arm fell more than `cap` below the optimum.
    pub cap_violations: u64,
    pub cap_violation_rate: f64,
    pub collapsed_runs: u64,
    pub collapsed_cap_violations: u64,
}

/// Run the first policy once per bias bound and summarize the suboptimality
/// of the returned arm against `4 L + epsilon`.
pub fn degradation_study(config: &ExperimentConfig) -> Result<Vec<DegradationRow>> {
    single("sigmas", config.sigmas.len(), "a degradation study")?;
    single("budgets", config.budgets.len(), "a degradation study")?;
    single(
        "radius_factors",
        config.radius_factors.len(),
        "a degradation study",
    )?;
    let mut c = config.clone();
    c.policies.truncate(1);
    c.efficiency = None;
    let res = run_sweep(&c)?;
    let reps = c.replications as usize;
    Ok(res
        .rows
        .iter()
        .zip(res.records.chunks(reps))
        .map(|(row, lines)| {
            let cap = 4.0 * row.bias_bound + c.epsilon;
            let mut violations = 0;
            let mut collapsed = 0;
            let mut collapsed_violations = 0;
            for line in lines {
                let over = line.record.suboptimality() > cap;
                let collapse =
                    line.record.termination == crate::engine::Termination::FrontierCollapse;
                violations += over as u64;
                collapsed += collapse as u64;
                collapsed_violations += (over && collapse) as u64;
            }
            DegradationRow {
                bias_bound: row.bias_bound,
                replications: row.replications,
                pcs: row.pcs,
                pcs_stderr: row.pcs_stderr,
                mean_selected_mu: row.mean_selected_mu,
                cap,
                cap_violations: violations,
                cap_violation_rate: violations as f64 / row.replications as f64,
                collapsed_runs: collapsed,
                collapsed_cap_violations: collapsed_violations,
            }
        })
        .collect())
}
