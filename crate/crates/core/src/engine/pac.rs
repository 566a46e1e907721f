use crate::bandit::{ArmId, ArmStats, Environment};
use crate::error::Result;

use super::dynamic::frontier_spread;
use super::{
    empirical_best, Allocation, DecisionView, EngineConfig, EpochObserver, ProportionAudit,
    PruneEvent, PruneReason, PruningPolicy, RunRecord, Termination,
};

/// Run the bias-aware pruning loop with the strict PAC rule.
pub fn run_pac_mcts<E: Environment>(env: &mut E, config: &EngineConfig) -> Result<RunRecord> {
    run_engine(env, &config.with_policy(PruningPolicy::StrictPac), &mut ())
}

/// Same loop with the bias shield removed from the radius.
pub fn run_naive_pruning<E: Environment>(env: &mut E, config: &EngineConfig) -> Result<RunRecord> {
    run_engine(env, &config.with_policy(PruningPolicy::Naive), &mut ())
}

/// Same loop eliminating a fixed fraction of the frontier after every pass.
pub fn run_proportion_pruning<E: Environment>(
    env: &mut E,
    config: &EngineConfig,
    proportion: f64,
) -> Result<RunRecord> {
    run_engine(
        env,
        &config.with_policy(PruningPolicy::Proportion(proportion)),
        &mut (),
    )
}

/// Same loop without pruning.
pub fn run_uniform<E: Environment>(env: &mut E, config: &EngineConfig) -> Result<RunRecord> {
    run_engine(env, &config.with_policy(PruningPolicy::None), &mut ())
}

struct Run<'e, E> {
    env: &'e mut E,
    stats: Vec<ArmStats>,
    samples: u64,
    max_depth: usize,
}

impl<E: Environment> Run<'_, E> {
    fn pull(&mut self, arm: ArmId) -> Result<()> {
        let y = self.env.sample(arm)?;
        self.stats[arm].record(y);
        self.samples += 1;
        self.max_depth = self.max_depth.max(self.env.depth(arm));
        Ok(())
    }
}

/// The engine loop shared by every pruning policy.
pub fn run_engine<E: Environment, O: EpochObserver>(
    env: &mut E,
    config: &EngineConfig,
    observer: &mut O,
) -> Result<RunRecord> {
    config.validate()?;
    let conf = config.confidence;
    let budget = config.budget;

    let mut active = env.initial_frontier();
    let mut run = Run {
        stats: vec![ArmStats::default(); env.arm_count()],
        env,
        samples: 0,
        max_depth: 0,
    };
    let mut arms_entered = active.len();
    let mut events = Vec::new();
    let mut audits = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    let mut epoch = 0u64;

    let termination = loop {
        if run.samples >= budget {
            break Termination::Budget;
        }
        if active.len() == 1 && !run.env.is_expandable(active[0]) {
            break Termination::FrontierCollapse;
        }

        // Phase 1: allocation.
        match config.allocation {
            Allocation::RoundRobin => {
                for &arm in &active {
                    if run.samples >= budget {
                        break;
                    }
                    run.pull(arm)?;
                }
            }
            Allocation::UcbGreedy => {
                let cold: Vec<ArmId> = active
                    .iter()
                    .copied()
                    .filter(|&a| run.stats[a].pulls < config.min_pulls)
                    .collect();
                if cold.is_empty() {
                    let m_count = active.len();
                    let shield = conf.bias_bound;
                    let target = argmax_by(&active, |a| {
                        let s = &run.stats[a];
                        s.sum / s.pulls as f64 + conf.stat_radius(s.pulls, m_count) + shield
                    });
                    run.pull(target)?;
                } else {
                    for arm in cold {
                        if run.samples >= budget {
                            break;
                        }
                        run.pull(arm)?;
                    }
                }
            }
        }
        if active
            .iter()
            .any(|&a| run.stats[a].pulls < config.min_pulls)
        {
            epoch += 1;
            continue;
        }

        // Phase 2: radii with the live frontier size.
        let m_count = active.len();
        let means: Vec<f64> = active
            .iter()
            .map(|&a| run.stats[a].sum / run.stats[a].pulls as f64)
            .collect();
        let shield = match config.policy {
            PruningPolicy::Naive => 0.0,
            _ => match config.dynamic_bias {
                Some(c) => frontier_spread(&means)
                    .map(|s| (c * s).min(conf.bias_bound))
                    .unwrap_or(conf.bias_bound),
                None => conf.bias_bound,
            },
        };
        radii.clear();
        radii.extend(
            active
                .iter()
                .map(|&a| conf.stat_radius(run.stats[a].pulls, m_count) + shield),
        );
        observer.on_decision(
            &DecisionView {
                epoch,
                active: &active,
                stats: &run.stats,
                radii: &radii,
                shield,
            },
            &*run.env,
        );

        // Phase 3: pruning.
        match config.policy {
            PruningPolicy::StrictPac | PruningPolicy::Naive => {
                let best_pos = argmax_pos(&active, &means);
                let threshold = means[best_pos] - radii[best_pos] - conf.epsilon;
                let mut keep = Vec::with_capacity(active.len());
                let mut kept_radii = Vec::with_capacity(active.len());
                for (i, &arm) in active.iter().enumerate() {
                    if i != best_pos && means[i] + radii[i] < threshold {
                        events.push(PruneEvent {
                            epoch,
                            arm,
                            reason: PruneReason::Confidence,
                        });
                    } else {
                        keep.push(arm);
                        kept_radii.push(radii[i]);
                    }
                }
                active = keep;
                radii = kept_radii;
            }
            PruningPolicy::Proportion(a) => {
                let k = (a * m_count as f64).floor() as usize;
                if k > 0 {
                    let mut order: Vec<usize> = (0..m_count).collect();
                    // Lowest mean first; among equal means the higher id goes first.
                    order.sort_by(|&x, &y| {
                        means[x]
                            .total_cmp(&means[y])
                            .then(active[y].cmp(&active[x]))
                    });
                    let doomed = &order[..k];
                    audits.push(audit_proportion(
                        &run, &active, &means, doomed, config, epoch,
                    ));
                    let mut drop = vec![false; m_count];
                    for &i in doomed {
                        drop[i] = true;
                        events.push(PruneEvent {
                            epoch,
                            arm: active[i],
                            reason: PruneReason::Proportion,
                        });
                    }
                    let mut i = 0;
                    active.retain(|_| {
                        i += 1;
                        !drop[i - 1]
                    });
                    let mut i = 0;
                    radii.retain(|_| {
                        i += 1;
                        !drop[i - 1]
                    });
                }
            }
            PruningPolicy::None => {}
        }

        // Phase 4: optimistic expansion (tree environments only).
        let expandable: Vec<usize> = (0..active.len())
            .filter(|&i| run.env.is_expandable(active[i]))
            .collect();
        if !expandable.is_empty() {
            let mut pick = expandable[0];
            let mut best_q = f64::NEG_INFINITY;
            for &i in &expandable {
                let arm = active[i];
                let q = run.stats[arm].mean().unwrap_or(f64::INFINITY) + radii[i];
                if q > best_q || (q == best_q && arm < active[pick]) {
                    best_q = q;
                    pick = i;
                }
            }
            let parent = active.remove(pick);
            let children = run.env.expand(parent)?;
            run.stats.resize(run.env.arm_count(), ArmStats::default());
            arms_entered += children.len();
            active.extend(children);
        }

        epoch += 1;
    };

    let selected = empirical_best(&active, &run.stats)
        .unwrap_or_else(|| *active.iter().min().expect("frontier is never empty"));
    let env = &*run.env;
    Ok(RunRecord {
        selected_arm: selected,
        selected_true_mu: env.true_mean(selected),
        optimal_mu: env.optimal_mean(),
        correct: env.is_optimal(selected),
        total_samples: run.samples,
        epochs: epoch,
        termination,
        pruning_events: events,
        arms_entered,
        max_depth: run.max_depth,
        final_pulls: run.stats.iter().map(|s| s.pulls).collect(),
        proportion_audits: audits,
    })
}

fn argmax_pos(active: &[ArmId], means: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..active.len() {
        if means[i] > means[best] || (means[i] == means[best] && active[i] < active[best]) {
            best = i;
        }
    }
    best
}

fn argmax_by(active: &[ArmId], score: impl Fn(ArmId) -> f64) -> ArmId {
    let mut best = active[0];
    let mut best_score = score(best);
    for &arm in &active[1..] {
        let s = score(arm);
        if s > best_score || (s == best_score && arm < best) {
            best = arm;
            best_score = s;
        }
    }
    best
}

fn audit_proportion<E: Environment>(
    run: &Run<'_, E>,
    active: &[ArmId],
    means: &[f64],
    doomed: &[usize],
    config: &EngineConfig,
    epoch: u64,
) -> ProportionAudit {
    let conf = &config.confidence;
    let env = &*run.env;
    let m_count = active.len();
    let l = conf.bias_bound;
    let stat = |arm: ArmId| conf.stat_radius(run.stats[arm].pulls, m_count);

    let concentration_held = active
        .iter()
        .zip(means)
        .all(|(&arm, &b)| (b - env.true_mean(arm)).abs() <= stat(arm) + l);

    let optimal_pos = active.iter().position(|&a| env.is_optimal(a));
    let (distinguishable, optimal_eliminated) = match optimal_pos {
        Some(p) => {
            let star = active[p];
            let mu_star = env.true_mean(star);
            let u_star = stat(star);
            let count = active
                .iter()
                .filter(|&&j| j != star)
                .filter(|&&j| mu_star - env.true_mean(j) > 2.0 * l + u_star + stat(j))
                .count();
            (count, doomed.contains(&p))
        }
        None => (0, false),
    };
    ProportionAudit {
        epoch,
        eliminated: doomed.len(),
        distinguishable,
        concentration_held,
        condition_held: optimal_pos.is_some() && doomed.len() <= distinguishable,
        optimal_eliminated,
    }
}
