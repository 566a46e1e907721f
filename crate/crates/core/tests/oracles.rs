use pac_mcts::bandit::BiasModel;
use pac_mcts::confidence::ConfidenceConfig;
use pac_mcts::oracle::{
    verify_complexity_minimality, verify_concentration, verify_safe_pruning_exhaustive,
    SafetyReplaySpec, VerifySuite,
};

fn replay(means: Vec<f64>, bound: f64, sigma: f64, budget: u64, a: f64) -> SafetyReplaySpec {
    SafetyReplaySpec {
        means,
        bias: BiasModel::static_adversarial(bound),
        sigma,
        delta: 0.05,
        epsilon: 0.0,
        radius_factor: 1.0,
        budget,
        seeds: 2000,
        base_seed: 0,
        proportion: a,
        proportion_min_pulls: 1,
    }
}

#[test]
fn coverage_stays_under_delta() {
    let cfg = ConfidenceConfig::new(0.3, 0.05).with_bias(0.1);
    let r = verify_concentration(&cfg, 10, 1000, 10_000, 0).unwrap();
    assert!(r.passed, "{r:?}");
    // Frozen from the reference run; the bound is loose, so this is far below delta.
    assert_eq!(r.violations, 35);
}

#[test]
fn coverage_fails_with_a_shrunk_radius() {
    let cfg = ConfidenceConfig::new(0.3, 0.05)
        .with_bias(0.1)
        .with_radius_factor(0.4);
    let r = verify_concentration(&cfg, 10, 1000, 2000, 1).unwrap();
    assert!(!r.passed, "{r:?}");
}

#[test]
fn strict_pruning_is_safe_under_the_event() {
    let mut spec = replay(vec![1.0, 0.0, 0.0, 0.0], 0.1, 0.2, 60, 0.3);
    spec.proportion_min_pulls = 8;
    let r = verify_safe_pruning_exhaustive(&spec).unwrap();
    assert!(r.passed, "{r:?}");
    assert_eq!(r.strict.optimal_pruned_under_event, 0);
    assert!(r.strict.event_held > 1900, "{:?}", r.strict);
    assert!(r.strict.replays_with_pruning > 1900, "{:?}", r.strict);
    assert!(r.proportion.condition_held > 0, "{:?}", r.proportion);
    assert_eq!(r.proportion.optimal_eliminated_when_held, 0);
}

#[test]
fn shield_wider_than_gap_blocks_pruning() {
    let spec = replay(vec![0.05, 0.0, 0.0], 0.1, 0.1, 30, 0.3);
    let r = verify_safe_pruning_exhaustive(&spec).unwrap();
    assert_eq!(r.strict.replays_with_pruning, 0, "{:?}", r.strict);
    assert_eq!(r.strict.optimal_pruned, 0);
}

#[test]
fn audit_flags_oversized_eliminations() {
    let spec = replay(vec![1.0, 0.0, 0.0, 0.0], 0.1, 0.2, 40, 0.9);
    let r = verify_safe_pruning_exhaustive(&spec).unwrap();
    assert!(
        r.proportion.cardinality_violations > 0,
        "{:?}",
        r.proportion
    );
    assert_eq!(r.proportion.condition_held, 0);
}

#[test]
fn minimality_over_random_inputs() {
    let r = verify_complexity_minimality(1000, 0).unwrap();
    assert!(r.passed, "{r:?}");
    assert_eq!(r.minimality_failures, 0);
    assert_eq!(r.solver_disagreements, 0);
    assert!(r.max_solver_gap <= 1);
}

#[test]
fn default_suite_passes() {
    let mut suite = VerifySuite::default();
    suite.coverage.as_mut().unwrap().trials = 2000;
    suite.safety.as_mut().unwrap().seeds = 2000;
    let r = suite.run().unwrap();
    assert!(r.passed, "{:?}", r.failures);
}

#[test]
fn preset_suite_matches_default() {
    let path = format!("{}/../../configs/verify.json", env!("CARGO_MANIFEST_DIR"));
    let suite = VerifySuite::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(suite, VerifySuite::default());
}
