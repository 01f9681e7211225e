mod common;

use common::{best_order_cost, int, optimal_cost, tiny_corpus};
use odtn::bounds::{
    brute_force_nonadaptive_opt, compute_bounds, entropy_lower_bound, optimal_policy_cost, sparsity_lower_bound,
    ssc_lower_bound, Caps,
};
use odtn::harness::algo::{build_strategy, AlgoOptions, Algorithm};
use odtn::harness::eval::exact_strategy_cost;
use odtn::harness::generate::{generate_instance, GenParams, Kind};
use odtn::{AsrnInstance, StopRule};

#[test]
fn dp_matches_exhaustive_search() {
    let caps = Caps::default();
    for table in tiny_corpus(30, 4, 4, 3, 5) {
        let inst = AsrnInstance::odtn(&table).unwrap();
        let dp = optimal_policy_cost(&inst, &StopRule::AllCovered, &caps).unwrap();
        assert_eq!(Some(dp.cost.clone()), optimal_cost(&table));
        let (perm, order) = brute_force_nonadaptive_opt(&inst, &caps).unwrap();
        assert_eq!(Some(perm.clone()), best_order_cost(&table));
        assert_eq!(common::order_cost(&table, &order), Some(perm.clone()));
        assert!(dp.cost <= perm);
    }
}

#[test]
fn lower_bounds_hold() {
    let caps = Caps::default();
    for table in tiny_corpus(40, 7, 7, 4, 6) {
        let inst = AsrnInstance::odtn(&table).unwrap();
        let opt = optimal_policy_cost(&inst, &StopRule::AllCovered, &caps).unwrap().cost;
        assert!(ssc_lower_bound(&table, caps.ssc_max_m).unwrap() <= opt);
        assert!(int(sparsity_lower_bound(&table).unwrap() as usize) <= opt);
        for alg in [Algorithm::AdaptiveC, Algorithm::AdaptiveR, Algorithm::Nonadaptive] {
            let s = build_strategy(alg, &table, &AlgoOptions::default()).unwrap();
            assert!(exact_strategy_cost(s.as_ref(), &table, 16).unwrap().expected >= opt);
        }
    }
}

#[test]
fn entropy_of_uniform_noiseless() {
    let table = generate_instance(&GenParams::new(Kind::Noiseless, 8, 6, 2)).unwrap();
    assert!((entropy_lower_bound(&table) - 3.0).abs() < 1e-12);
    let report = compute_bounds(&table, &Caps::default()).unwrap();
    assert_eq!(report.entropy_lb, 3.0);
    assert!(report.opt_adaptive.unwrap().value >= 3.0);
}

#[test]
fn caps_are_reported_not_fatal() {
    let table = generate_instance(&GenParams::new(Kind::Noiseless, 16, 12, 2)).unwrap();
    let report = compute_bounds(&table, &Caps::default()).unwrap();
    assert!(report.opt_adaptive.is_none());
    assert!(report.ssc_lb.is_none());
    assert!(report.opt_nonadaptive.is_none());
    assert_eq!(report.skipped.len(), 3);
    assert!(report.entropy_lb > 0.0);
}
