use crate::bandit::{ArmId, ArmStats, Environment};
use crate::error::{Error, Result};

use super::{RunRecord, Termination};

/// UCT without pruning.
///
/// Flat environments reduce to UCB1 over the initial frontier. In tree
/// environments a node is expanded on its second visit, rewards are backed up
/// along the selection path, and the recommendation is the greedy descent on
/// empirical means. Children are scored by `b + c * sqrt(2 ln N / n)`.
pub fn run_baseline_uct<E: Environment>(
    env: &mut E,
    budget: u64,
    exploration: f64,
) -> Result<RunRecord> {
    if budget < 1 {
        return Err(Error::invalid("budget", "must be at least 1"));
    }
    if !(exploration >= 0.0 && exploration.is_finite()) {
        return Err(Error::invalid(
            "uct_exploration",
            "must be finite and non-negative",
        ));
    }
    let roots = env.initial_frontier();
    let mut arms_entered = roots.len();
    let mut stats = vec![ArmStats::default(); env.arm_count()];
    let mut children: Vec<Vec<ArmId>> = vec![Vec::new(); env.arm_count()];
    let mut max_depth = 0;
    let mut path = Vec::new();
    let mut total = 0u64;

    while total < budget {
        path.clear();
        let mut parent_visits = total;
        let mut options: &[ArmId] = &roots;
        let leaf = loop {
            let pick = select(options, &stats, parent_visits, exploration);
            path.push(pick);
            if !children[pick].is_empty() {
                parent_visits = stats[pick].pulls;
                options = &children[pick];
                continue;
            }
            if stats[pick].pulls > 0 && env.is_expandable(pick) {
                let kids = env.expand(pick)?;
                arms_entered += kids.len();
                stats.resize(env.arm_count(), ArmStats::default());
                children.resize(env.arm_count(), Vec::new());
                let first = kids[0];
                children[pick] = kids;
                path.push(first);
                break first;
            }
            break pick;
        };
        let y = env.sample(leaf)?;
        total += 1;
        max_depth = max_depth.max(env.depth(leaf));
        for &node in &path {
            stats[node].record(y);
        }
    }

    let mut selected = greedy(&roots, &stats);
    while !children[selected].is_empty() && children[selected].iter().any(|&c| stats[c].pulls > 0) {
        selected = greedy(&children[selected], &stats);
    }
    Ok(RunRecord {
        selected_arm: selected,
        selected_true_mu: env.true_mean(selected),
        optimal_mu: env.optimal_mean(),
        correct: env.is_optimal(selected),
        total_samples: total,
        epochs: total,
        termination: Termination::Budget,
        pruning_events: Vec::new(),
        arms_entered,
        max_depth,
        final_pulls: stats.iter().map(|s| s.pulls).collect(),
        proportion_audits: Vec::new(),
    })
}

fn select(options: &[ArmId], stats: &[ArmStats], parent_visits: u64, c: f64) -> ArmId {
    if let Some(&fresh) = options.iter().find(|&&a| stats[a].pulls == 0) {
        return fresh;
    }
    let log_n = (parent_visits.max(1) as f64).ln();
    let mut best = options[0];
    let mut best_score = f64::NEG_INFINITY;
    for &arm in options {
        let s = &stats[arm];
        let n = s.pulls as f64;
        let score = s.sum / n + c * (2.0 * log_n / n).sqrt();
        if score > best_score {
            best = arm;
            best_score = score;
        }
    }
    best
}

fn greedy(options: &[ArmId], stats: &[ArmStats]) -> ArmId {
    super::empirical_best(options, stats).unwrap_or(options[0])
}
