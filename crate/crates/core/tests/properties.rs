use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;

use pac_mcts::bandit::{ArmLayout, BiasModel, FlatEnv, FlatInstance, GroundTruth};
use pac_mcts::confidence::{
    lower_bound_samples, sample_complexity_lambert, sample_complexity_upper, u_dist, u_stat,
    ComplexityInputs, ConfidenceConfig, LowerBound, SampleBound,
};
use pac_mcts::engine::{
    run_engine, run_pac_mcts, DecisionView, EngineConfig, EpochObserver, PruningPolicy,
};
use pac_mcts::oracle::{check_minimality, random_feasible_inputs};
use pac_mcts::rng::stream;

fn config() -> impl Strategy<Value = ConfidenceConfig> {
    (0.01f64..10.0, 0.001f64..0.5, 0.0f64..2.0, 0.1f64..2.0).prop_map(|(s, d, l, c)| {
        ConfidenceConfig::new(s, d)
            .with_bias(l)
            .with_radius_factor(c)
    })
}

#[test]
fn u_stat_decreases_over_a_grid_of_n() {
    for &(sigma, delta, m) in &[
        (0.3, 0.05, 30),
        (1.0, 0.01, 2),
        (2.0, 0.2, 10),
        (0.1, 0.05, 1),
    ] {
        let cfg = ConfidenceConfig::new(sigma, delta);
        assert!(cfg.log_constant(m) >= std::f64::consts::E.powi(2));
        let mut prev = f64::INFINITY;
        for n in 1..=10_000 {
            let r = u_stat(n, m, &cfg).unwrap();
            assert!(r < prev, "sigma={sigma} delta={delta} M={m} n={n}");
            prev = r;
        }
    }
}

proptest! {
    #[test]
    fn u_stat_orderings(cfg in config(), n in 1u64..100_000, m in 1usize..1000) {
        let base = u_stat(n, m, &cfg).unwrap();
        prop_assert!(u_stat(n, m + 1, &cfg).unwrap() > base);
        let mut tighter = cfg;
        tighter.delta = cfg.delta * 1.5;
        prop_assert!(u_stat(n, m, &tighter).unwrap() < base);
    }

    #[test]
    fn u_stat_is_linear_in_sigma_and_factor(cfg in config(), n in 1u64..100_000, m in 1usize..1000, k in 0.1f64..10.0) {
        let base = u_stat(n, m, &cfg).unwrap();
        let mut s = cfg;
        s.sigma *= k;
        let mut c = cfg;
        c.radius_factor *= k;
        prop_assert!((u_stat(n, m, &s).unwrap() - k * base).abs() <= 1e-12 * k * base);
        prop_assert!((u_stat(n, m, &c).unwrap() - k * base).abs() <= 1e-12 * k * base);
    }

    #[test]
    fn bias_shield_is_exact(cfg in config(), n in 1u64..100_000, m in 1usize..1000) {
        let d = u_dist(n, m, &cfg).unwrap();
        let s = u_stat(n, m, &cfg).unwrap();
        prop_assert_eq!(d, s + cfg.bias_bound);
    }

    #[test]
    fn lower_bound_never_exceeds_upper(seed in any::<u64>()) {
        let (mut inputs, _) = random_feasible_inputs(&mut stream(seed));
        inputs.config.epsilon = 0.0;
        inputs.config.radius_factor = 1.0;
        if inputs.config.delta < 0.25 {
            if let (SampleBound::Finite(n), LowerBound::Finite(lb)) = (
                sample_complexity_upper(&inputs).unwrap(),
                lower_bound_samples(inputs.gap, &inputs.config).unwrap(),
            ) {
                prop_assert!(lb <= n as f64, "lower {lb} > upper {n}");
            }
        }
    }

    #[test]
    fn halving_the_margin_quadruples_the_bound(gap in 0.05f64..5.0, sigma in 0.1f64..5.0, m in 2usize..200) {
        let cfg = ConfidenceConfig::new(sigma, 0.05);
        let a = ComplexityInputs::new(gap, m, cfg);
        let b = ComplexityInputs::new(gap / 2.0, m, cfg);
        let (SampleBound::Finite(na), SampleBound::Finite(nb)) =
            (sample_complexity_upper(&a).unwrap(), sample_complexity_upper(&b).unwrap())
        else {
            panic!("feasible inputs");
        };
        prop_assume!(na >= 50);
        prop_assert!(nb as f64 >= 3.9 * na as f64, "{na} -> {nb}");
    }
}

#[test]
fn solvers_agree_on_random_inputs() {
    let mut rng = stream(0x5eed);
    for _ in 0..1000 {
        let (inputs, _) = random_feasible_inputs(&mut rng);
        let (minimal, gap) = check_minimality(&inputs).unwrap();
        assert!(minimal, "{inputs:?}");
        assert!(gap <= 1, "{inputs:?}");
    }
}

#[test]
fn larger_gap_needs_fewer_samples() {
    let cfg = ConfidenceConfig::new(0.5, 0.05).with_bias(0.05);
    let mut prev = u64::MAX;
    for i in 1..=40 {
        let gap = 0.25 + 0.1 * i as f64;
        let inputs = ComplexityInputs::new(gap, 20, cfg);
        let SampleBound::Finite(n) = sample_complexity_lambert(&inputs).unwrap() else {
            panic!("feasible");
        };
        assert!(n <= prev);
        prev = n;
    }
}

struct FrontierLog {
    sets: Vec<Vec<usize>>,
}

impl EpochObserver for FrontierLog {
    fn on_decision(&mut self, view: &DecisionView<'_>, _: &dyn GroundTruth) {
        self.sets.push(view.active.to_vec());
    }
}

fn flat(arms: usize, gap: f64, bias: f64, sigma: f64) -> Arc<FlatInstance> {
    Arc::new(
        FlatInstance::new(
            &ArmLayout::single_gap(arms, gap),
            &BiasModel::static_adversarial(bias),
            sigma,
        )
        .unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pruning_is_monotone(seed in any::<u64>(), arms in 2usize..12, c in 0.1f64..1.0) {
        let inst = flat(arms, 0.5, 0.05, 0.3);
        let conf = ConfidenceConfig::new(0.3, 0.05).with_bias(0.05).with_radius_factor(c);
        let cfg = EngineConfig::new(conf, PruningPolicy::StrictPac, 400);
        let mut log = FrontierLog { sets: Vec::new() };
        let rec = run_engine(&mut FlatEnv::new(inst, seed), &cfg, &mut log).unwrap();
        for w in log.sets.windows(2) {
            let before: HashSet<_> = w[0].iter().collect();
            prop_assert!(w[1].iter().all(|a| before.contains(a)));
        }
        let mut seen = HashSet::new();
        for e in &rec.pruning_events {
            prop_assert!(seen.insert(e.arm), "arm {} pruned twice", e.arm);
            prop_assert!(e.arm != rec.selected_arm);
        }
        prop_assert!(rec.total_samples <= 400);
    }

    #[test]
    fn decisions_are_scale_equivariant(seed in any::<u64>(), exp in -6i32..7) {
        let k = 2f64.powi(exp);
        let base = flat(8, 0.4, 0.05, 0.3);
        let scaled = Arc::new(base.scaled(k));
        let conf = ConfidenceConfig::new(0.3, 0.05).with_bias(0.05).with_epsilon(0.01).with_radius_factor(0.4);
        let mut conf_k = conf;
        conf_k.sigma *= k;
        conf_k.bias_bound *= k;
        conf_k.epsilon *= k;
        let a = run_pac_mcts(&mut FlatEnv::new(base, seed), &EngineConfig::new(conf, PruningPolicy::StrictPac, 500)).unwrap();
        let b = run_pac_mcts(&mut FlatEnv::new(scaled, seed), &EngineConfig::new(conf_k, PruningPolicy::StrictPac, 500)).unwrap();
        prop_assert_eq!(a.selected_arm, b.selected_arm);
        prop_assert_eq!(a.pruning_events, b.pruning_events);
        prop_assert_eq!(a.final_pulls, b.final_pulls);
    }

    #[test]
    fn seeded_runs_replay(seed in any::<u64>()) {
        let inst = flat(6, 0.3, 0.05, 0.5);
        let conf = ConfidenceConfig::new(0.5, 0.05).with_bias(0.05).with_radius_factor(0.5);
        let cfg = EngineConfig::new(conf, PruningPolicy::StrictPac, 300);
        let a = run_pac_mcts(&mut FlatEnv::new(inst.clone(), seed), &cfg).unwrap();
        let b = run_pac_mcts(&mut FlatEnv::new(inst, seed), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bias_offsets_respect_the_bound(means in prop::collection::vec(-5.0f64..5.0, 2..20), l in 0.0f64..2.0, k in 1usize..25) {
        prop_assume!({
            let mut s = means.clone();
            s.sort_by(|a, b| b.total_cmp(a));
            s[0] > s[1]
        });
        for model in [BiasModel::static_adversarial(l), BiasModel::top_k(l, k), BiasModel::unbiased()] {
            let offsets = model.offsets(&means).unwrap();
            prop_assert!(offsets.iter().all(|o| o.abs() <= l));
        }
        let full = BiasModel::top_k(l, means.len() - 1).offsets(&means).unwrap();
        prop_assert_eq!(full, BiasModel::static_adversarial(l).offsets(&means).unwrap());
    }

    #[test]
    fn any_config_round_trips(cfg in config()) {
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ConfidenceConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
