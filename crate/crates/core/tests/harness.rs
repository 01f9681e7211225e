mod common;

use common::{expand, int, tiny_corpus};
use num_rational::BigRational;
use num_traits::Zero;
use odtn::harness::algo::{build_strategy, AlgoOptions, Algorithm};
use odtn::harness::eval::{exact_strategy_cost, monte_carlo_cost, policy_tree_cost, simulate_run, trial_rng};
use odtn::harness::generate::{audit, generate_instance, GenParams, Kind, PriorKind};
use odtn::harness::oracle::{ReplayOracle, SimulatedOracle};
use odtn::model::ratio_to_f64;
use odtn::{AdaptivePolicy, AsrnInstance, InstanceDocument, OutcomeOracle, Variant};
use proptest::prelude::*;

const ALGOS: [Algorithm; 4] = [Algorithm::Nonadaptive, Algorithm::AdaptiveC, Algorithm::AdaptiveR, Algorithm::Sparse];

#[test]
fn exact_cost_is_mean_over_all_replays() {
    for table in tiny_corpus(20, 5, 6, 4, 21) {
        let scenarios = expand(&table);
        for alg in ALGOS {
            let s = build_strategy(alg, &table, &AlgoOptions::default()).unwrap();
            let mut cost = BigRational::zero();
            let mut miss = BigRational::zero();
            for x in &scenarios {
                let t = s.run(&mut ReplayOracle::new(x.outcomes.clone())).unwrap();
                cost += &x.mass * int(t.test_count());
                if !t.verdict.contains(x.hyp) {
                    miss += &x.mass;
                }
            }
            let exact = exact_strategy_cost(s.as_ref(), &table, 16).unwrap();
            assert_eq!(exact.expected, cost, "{alg}");
            assert_eq!(exact.error_rate, miss, "{alg}");
        }
    }
}

#[test]
fn exact_cost_equals_tree_value() {
    for (k, table) in tiny_corpus(20, 6, 6, 4, 22).iter().enumerate() {
        let inst = AsrnInstance::odtn(table).unwrap();
        let (alg, variant) = if k % 2 == 0 { (Algorithm::AdaptiveC, Variant::ScoreC) } else { (Algorithm::AdaptiveR, Variant::ScoreR) };
        let tree: BigRational = policy_tree_cost(&inst, &AdaptivePolicy::new(variant)).unwrap();
        let s = build_strategy(alg, table, &AlgoOptions::default()).unwrap();
        assert_eq!(exact_strategy_cost(s.as_ref(), table, 16).unwrap().expected, tree);
    }
}

#[test]
fn monte_carlo_agrees_with_exact() {
    for (k, table) in tiny_corpus(6, 6, 7, 4, 23).iter().enumerate() {
        let s = build_strategy(Algorithm::Meta, table, &AlgoOptions::default()).unwrap();
        let exact = ratio_to_f64(&exact_strategy_cost(s.as_ref(), table, 16).unwrap().expected);
        let mc = monte_carlo_cost(s.as_ref(), table, 20_000, k as u64).unwrap();
        // halfwidth is 1.96 sigma
        assert!((mc.mean - exact).abs() <= 3.0 * mc.halfwidth / 1.96 + 1e-12, "{} vs {exact}", mc.mean);
    }
}

#[test]
fn confidence_interval_coverage() {
    let table = &tiny_corpus(1, 6, 7, 4, 24)[0];
    let s = build_strategy(Algorithm::AdaptiveC, table, &AlgoOptions::default()).unwrap();
    let exact = ratio_to_f64(&exact_strategy_cost(s.as_ref(), table, 16).unwrap().expected);
    let covered = (0..100).filter(|&seed| {
        let mc = monte_carlo_cost(s.as_ref(), table, 400, 1000 + seed).unwrap();
        (mc.mean - exact).abs() <= mc.halfwidth
    });
    assert!(covered.count() >= 90);
}

#[test]
fn runs_never_exceed_n() {
    for table in tiny_corpus(20, 6, 8, 5, 25) {
        for alg in ALGOS {
            let s = build_strategy(alg, &table, &AlgoOptions::default()).unwrap();
            for truth in 0..table.m() {
                let t = simulate_run(s.as_ref(), &table, truth, 9).unwrap();
                assert!(t.test_count() <= table.n());
                assert_eq!(t, simulate_run(s.as_ref(), &table, truth, 9).unwrap());
                t.verify(&AsrnInstance::odtn(&table).unwrap()).unwrap();
            }
        }
    }
}

#[test]
fn generator_audits() {
    let kinds = [Kind::Noiseless, Kind::LowNoise { c: 3, r: 4 }, Kind::Sparse { alpha: 0.5 }, Kind::Nonident { d: 2 }];
    for (k, kind) in kinds.into_iter().enumerate() {
        for seed in 0..5 {
            let mut p = GenParams::new(kind, 16, 40, seed);
            if seed % 2 == 1 {
                p.prior = PriorKind::Dirichlet { concentration: 0.5 };
            }
            let inst = generate_instance(&p).unwrap();
            assert!(audit(&inst, kind).is_empty(), "{kind}");
            let doc = InstanceDocument::from_instance(&inst);
            assert!(doc.validate().is_valid());
            assert_eq!(doc.to_instance().unwrap(), inst);
            assert_eq!(generate_instance(&p).unwrap(), inst, "kind {k} seed {seed}");
        }
    }
    let sparse = generate_instance(&GenParams::new(Kind::Sparse { alpha: 0.5 }, 16, 40, 8)).unwrap();
    assert!(sparse.max_side() <= 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulated_noise_persists(seed in any::<u64>(), asks in proptest::collection::vec(0usize..8, 1..40)) {
        let table = &tiny_corpus(1, 6, 8, 8, seed % 500)[0];
        let truth = (seed as usize) % table.m();
        let mut oracle = SimulatedOracle::new(table, truth, trial_rng(seed, 0));
        let mut first = vec![None; table.n()];
        for e in asks {
            let e = e % table.n();
            let o = oracle.answer(e).unwrap();
            prop_assert_eq!(*first[e].get_or_insert(o), o);
            if let odtn::Response::Det(d) = table.response(e, truth) {
                prop_assert_eq!(o, d);
            }
        }
    }
}
