use std::sync::Arc;

use pac_mcts::bandit::{ArmLayout, BiasModel, FlatEnv, FlatInstance, TreeEnv, TreeSpec};
use pac_mcts::confidence::ConfidenceConfig;
use pac_mcts::engine::{
    run_baseline_uct, run_naive_pruning, run_pac_mcts, run_proportion_pruning, run_uniform,
    Allocation, EngineConfig, PruningPolicy, Termination,
};
use pac_mcts::harness::{
    degradation_study, run_cell_policy, run_sweep, ExperimentConfig, SweepRow,
};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

fn preset(name: &str) -> ExperimentConfig {
    let path = format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"));
    config(&std::fs::read_to_string(path).unwrap())
}

fn rows(c: &ExperimentConfig) -> Vec<SweepRow> {
    run_sweep(c).unwrap().rows
}

#[test]
fn two_well_separated_arms() {
    let c = config(
        r#"{
        "instance": {"type": "single_gap", "arms": 2, "gap": 1.0},
        "bias": {"kind": "unbiased"},
        "bias_bounds": [0.0],
        "sigmas": [0.01],
        "budgets": [20],
        "policies": [{"policy": "strict_pac"}],
        "replications": 1000
    }"#,
    );
    let r = rows(&c);
    assert!(r[0].pcs >= 0.99, "{}", r[0].pcs);
}

#[test]
fn noiseless_three_arms_are_exact() {
    let inst = Arc::new(
        FlatInstance::new(
            &ArmLayout::Means(vec![0.2, 0.9, 0.5]),
            &BiasModel::unbiased(),
            0.0,
        )
        .unwrap(),
    );
    let conf = ConfidenceConfig::new(0.0, 0.05);
    for seed in 0..20 {
        for policy in [
            PruningPolicy::StrictPac,
            PruningPolicy::Naive,
            PruningPolicy::None,
        ] {
            let cfg = EngineConfig::new(conf, policy, 30);
            let rec = run_pac_mcts(&mut FlatEnv::new(inst.clone(), seed), &cfg).unwrap();
            assert_eq!(rec.selected_arm, 1, "{policy:?}");
            assert!(rec.correct);
        }
        let rec = run_baseline_uct(&mut FlatEnv::new(inst.clone(), seed), 30, 0.0).unwrap();
        assert_eq!(rec.selected_arm, 1);
    }
    // With zero noise the radius vanishes, so both losers go after one pass.
    let cfg = EngineConfig::new(conf, PruningPolicy::StrictPac, 30);
    let rec = run_pac_mcts(&mut FlatEnv::new(inst, 0), &cfg).unwrap();
    assert_eq!(rec.pruned(), 2);
    assert_eq!(rec.total_samples, 3);
    assert_eq!(rec.termination, Termination::FrontierCollapse);
}

#[test]
fn naive_matches_strict_without_bias() {
    let inst = Arc::new(
        FlatInstance::new(&ArmLayout::single_gap(12, 0.3), &BiasModel::unbiased(), 0.4).unwrap(),
    );
    let cfg = EngineConfig::new(
        ConfidenceConfig::new(0.4, 0.05).with_radius_factor(0.4),
        PruningPolicy::StrictPac,
        800,
    );
    for seed in 0..200 {
        let a = run_pac_mcts(&mut FlatEnv::new(inst.clone(), seed), &cfg).unwrap();
        let b = run_naive_pruning(&mut FlatEnv::new(inst.clone(), seed), &cfg).unwrap();
        assert_eq!(a.selected_arm, b.selected_arm);
        assert_eq!(a.pruning_events, b.pruning_events);
        assert_eq!(a.final_pulls, b.final_pulls);
    }
}

#[test]
fn zero_proportion_is_uniform() {
    let inst = Arc::new(
        FlatInstance::new(
            &ArmLayout::single_gap(9, 0.2),
            &BiasModel::top_k(0.05, 3),
            0.5,
        )
        .unwrap(),
    );
    let cfg = EngineConfig::new(ConfidenceConfig::new(0.5, 0.05), PruningPolicy::None, 301);
    for seed in 0..100 {
        let a = run_proportion_pruning(&mut FlatEnv::new(inst.clone(), seed), &cfg, 0.0).unwrap();
        let b = run_uniform(&mut FlatEnv::new(inst.clone(), seed), &cfg).unwrap();
        assert!(a.pruning_events.is_empty());
        assert_eq!(a.selected_arm, b.selected_arm);
        assert_eq!(a.final_pulls, b.final_pulls);
        assert_eq!(a.total_samples, 301);
    }
}

#[test]
fn aggressive_proportion_collapses() {
    let mut c = preset("proportion.json");
    c.replications = 400;
    let r = rows(&c);
    let (mild, harsh, uniform) = (&r[0], &r[1], &r[2]);
    assert_eq!(mild.policy, "proportion(0.3)");
    assert_eq!(harsh.policy, "proportion(0.5)");
    assert!(
        mild.pcs > harsh.pcs + 0.2,
        "a=0.3 {} vs a=0.5 {}",
        mild.pcs,
        harsh.pcs
    );
    assert!(
        mild.pcs > uniform.pcs,
        "a=0.3 {} vs uniform {}",
        mild.pcs,
        uniform.pcs
    );
}

#[test]
fn returned_arm_respects_the_cap() {
    let mut c = preset("degradation.json");
    c.replications = 300;
    for row in degradation_study(&c).unwrap() {
        assert!(row.cap_violation_rate <= c.delta, "{row:?}");
        assert_eq!(row.collapsed_cap_violations, 0, "{row:?}");
    }
}

#[test]
fn pruning_fades_as_the_shield_grows() {
    let mut c = preset("safety_ablation.json");
    c.bias_bounds = vec![0.0, 0.05, 0.15, 0.25, 0.4];
    c.radius_factors = vec![0.45];
    c.policies.truncate(1);
    c.replications = 150;
    let r = rows(&c);
    for w in r.windows(2) {
        assert!(
            w[1].pruning_rate <= w[0].pruning_rate + 0.01,
            "L={} {} -> L={} {}",
            w[0].bias_bound,
            w[0].pruning_rate,
            w[1].bias_bound,
            w[1].pruning_rate
        );
    }
    assert!(r[0].pruning_rate > 0.5);
    assert!(r.last().unwrap().pruning_rate < 0.1);
}

#[test]
fn noiseless_uct_is_always_right() {
    let inst = Arc::new(
        FlatInstance::new(
            &ArmLayout::single_gap(10, 0.01),
            &BiasModel::unbiased(),
            0.0,
        )
        .unwrap(),
    );
    for seed in 0..50 {
        let rec = run_baseline_uct(&mut FlatEnv::new(inst.clone(), seed), 10 + seed, 0.0).unwrap();
        assert!(rec.correct, "budget {}", 10 + seed);
    }
}

#[test]
fn tree_runs_reach_the_leaves() {
    let mut spec = TreeSpec::new(4, 4, 0.3);
    spec.depth_discount = 0.99;
    let conf = ConfidenceConfig::new(0.3, 0.05).with_radius_factor(0.45);
    let mut cfg = EngineConfig::new(conf, PruningPolicy::StrictPac, 600);
    cfg.allocation = Allocation::UcbGreedy;
    let mut deepest = 0;
    for seed in 0..20 {
        let mut env = TreeEnv::new(spec.clone(), BiasModel::unbiased(), 0.3, seed).unwrap();
        let rec = run_pac_mcts(&mut env, &cfg).unwrap();
        assert!(rec.max_depth <= 4);
        deepest = deepest.max(rec.max_depth);
    }
    assert_eq!(deepest, 4);

    let mut c = preset("tree.json");
    c.replications = 50;
    for row in rows(&c) {
        assert!(row.pcs > 0.5, "{row:?}");
    }
}

#[test]
fn naive_degrades_under_stochastic_bias() {
    let mut c = preset("robustness.json");
    c.bias_bounds = vec![0.0, 0.25, 0.5];
    c.sigmas = vec![0.3];
    c.budgets = vec![3000];
    c.replications = 300;
    let r = rows(&c);
    let naive: Vec<f64> = r
        .iter()
        .filter(|x| x.policy == "naive")
        .map(|x| x.pcs)
        .collect();
    let strict: Vec<f64> = r
        .iter()
        .filter(|x| x.policy == "strict_pac")
        .map(|x| x.pcs)
        .collect();
    assert!(naive[0] > naive[1] && naive[1] > naive[2], "{naive:?}");
    assert!(naive[0] - naive[2] > 0.15, "{naive:?}");
    assert!(strict[1] > naive[1], "strict {strict:?} naive {naive:?}");
}

#[test]
fn common_random_numbers_across_policies() {
    let c = preset("proportion.json");
    let cell = c.cells().unwrap()[0];
    let a = run_cell_policy(&c, &cell, &c.policies[0]).unwrap();
    let b = run_cell_policy(&c, &cell, &c.policies[2]).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.seed == y.seed));
}
