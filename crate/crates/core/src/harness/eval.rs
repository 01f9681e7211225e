//! Expected-cost evaluation: exact over every star resolution, or Monte
//! Carlo with per-trial seeds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::algo::Strategy;
use super::oracle::SimulatedOracle;
use crate::adaptive::Policy;
use crate::coverage::AsrnInstance;
use crate::error::{Error, Result};
use crate::model::{OdtnInstance, Response};
use crate::nonadaptive::ScenarioSampler;
use crate::scalar::{self, Scalar};
use crate::state::BeliefState;
use crate::transcript::{OutcomeOracle, Transcript};

/// Normal quantile for a 95% two-sided interval.
pub const Z95: f64 = 1.959963984540054;

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One run against hypothesis `truth`, stars drawn from `seed`.
pub fn simulate_run(strategy: &dyn Strategy, table: &OdtnInstance, truth: usize, seed: u64) -> Result<Transcript> {
    let mut oracle = SimulatedOracle::new(table, truth, ChaCha8Rng::seed_from_u64(seed));
    let mut t = strategy.run(&mut oracle)?;
    t.seed = Some(seed);
    Ok(t)
}

/// Resolves stars from a list of forced choices, then with `0`, recording
/// every star it had to resolve.
struct BranchingOracle<'a> {
    table: &'a OdtnInstance,
    truth: usize,
    choices: Vec<usize>,
    cursor: usize,
    seen: Vec<Option<usize>>,
    cap: u32,
}

impl OutcomeOracle for BranchingOracle<'_> {
    fn answer(&mut self, element: usize) -> Result<usize> {
        if element >= self.table.n() {
            return Err(Error::Domain(format!("element {element} out of range")));
        }
        if let Response::Det(o) = self.table.response(element, self.truth) {
            return Ok(o);
        }
        if let Some(o) = self.seen[element] {
            return Ok(o);
        }
        if self.cursor == self.choices.len() {
            if self.choices.len() as u32 >= self.cap {
                return Err(Error::infeasible("star resolutions on one path", self.choices.len() + 1, self.cap));
            }
            self.choices.push(0);
        }
        let o = self.choices[self.cursor];
        self.cursor += 1;
        self.seen[element] = Some(o);
        Ok(o)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactCost {
    pub expected: BigRational,
    /// `E[cost | i]` for every hypothesis.
    pub per_hypothesis: Vec<BigRational>,
    /// Probability that the verdict misses the truth.
    pub error_rate: BigRational,
    pub max_cost: usize,
}

/// Exact expected cost and error of `strategy` for one truth: every
/// resolution of the stars the strategy actually queries is replayed.
pub fn exact_cost_for(strategy: &dyn Strategy, table: &OdtnInstance, truth: usize, cap: u32) -> Result<(BigRational, BigRational, usize)> {
    let omega = table.alphabet().len();
    let mut choices: Vec<usize> = Vec::new();
    let mut cost = BigRational::zero();
    let mut error = BigRational::zero();
    let mut max_cost = 0;
    loop {
        let mut oracle = BranchingOracle { table, truth, choices, cursor: 0, seen: vec![None; table.n()], cap };
        let t = strategy.run(&mut oracle)?;
        choices = oracle.choices;
        let weight = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(omega), choices.len()));
        cost += &weight * BigRational::from_integer(BigInt::from(t.test_count()));
        if !t.verdict.contains(truth) {
            error += &weight;
        }
        max_cost = max_cost.max(t.test_count());
        // next path in lexicographic order
        while choices.last().is_some_and(|&c| c + 1 == omega) {
            choices.pop();
        }
        match choices.last_mut() {
            Some(c) => *c += 1,
            None => break,
        }
    }
    Ok((cost, error, max_cost))
}

/// `Σ_i π_i · E[cost | i]`, exact.
pub fn exact_strategy_cost(strategy: &dyn Strategy, table: &OdtnInstance, cap: u32) -> Result<ExactCost> {
    let parts: Vec<(BigRational, BigRational, usize)> =
        (0..table.m()).into_par_iter().map(|i| exact_cost_for(strategy, table, i, cap)).collect::<Result<_>>()?;
    let prior = table.prior();
    let expected = parts.iter().zip(prior).map(|((c, _, _), p)| c * p).sum();
    let error_rate = parts.iter().zip(prior).map(|((_, e, _), p)| e * p).sum();
    let max_cost = parts.iter().zip(prior).filter(|(_, p)| p.is_positive()).map(|((_, _, k), _)| *k).max().unwrap_or(0);
    Ok(ExactCost { expected, error_rate, max_cost, per_hypothesis: parts.into_iter().map(|(c, _, _)| c).collect() })
}

/// Expected number of steps of `policy`, computed on its decision tree:
/// every node where it continues charges the mass of compatible expanded
/// scenarios reaching it.
pub fn policy_tree_cost<S: Scalar>(inst: &AsrnInstance, policy: &dyn Policy<S>) -> Result<S> {
    fn walk<S: Scalar>(state: &BeliefState<'_, S>, policy: &dyn Policy<S>) -> Result<S> {
        let Some(e) = policy.next(state)? else {
            return Ok(S::zero());
        };
        let mut total = state.alive_mass();
        for o in 0..state.instance().omega() {
            let child = state.observe(e, o)?;
            if child.alive_count() > 0 && !child.alive_mass().is_zero() {
                total = total + walk(&child, policy)?;
            }
        }
        Ok(total)
    }
    walk(&BeliefState::new(inst), policy)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarlo {
    pub trials: u64,
    pub mean: f64,
    /// 95% normal-approximation halfwidth.
    pub halfwidth: f64,
    pub errors: u64,
}

impl MonteCarlo {
    pub fn error_rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    /// `3 sqrt(p (1 - p) / trials)` for a reference error probability `p`.
    pub fn three_sigma(p: f64, trials: u64) -> f64 {
        3.0 * (p * (1.0 - p) / trials as f64).sqrt()
    }
}

/// Trials draw the truth from the prior and stars lazily; trial `k` uses
/// [`trial_rng`]`(seed, k)`, so results do not depend on scheduling.
pub fn monte_carlo_cost(strategy: &dyn Strategy, table: &OdtnInstance, trials: u64, seed: u64) -> Result<MonteCarlo> {
    if trials == 0 {
        return Err(Error::Domain("trial count must be positive".into()));
    }
    let sampler = ScenarioSampler::new(table)?;
    let outcomes: Vec<(u64, bool)> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k);
            let truth = sampler.sample(&mut rng);
            let mut oracle = SimulatedOracle::new(table, truth, rng);
            let t = strategy.run(&mut oracle)?;
            Ok((t.test_count() as u64, !t.verdict.contains(truth)))
        })
        .collect::<Result<_>>()?;
    let sum: u128 = outcomes.iter().map(|&(c, _)| c as u128).sum();
    let sum_sq: u128 = outcomes.iter().map(|&(c, _)| (c as u128) * (c as u128)).sum();
    let errors = outcomes.iter().filter(|&&(_, e)| e).count() as u64;
    let n = trials as f64;
    let mean = sum as f64 / n;
    let halfwidth = if trials > 1 {
        let var = ((sum_sq as f64) - n * mean * mean).max(0.0) / (n - 1.0);
        Z95 * (var / n).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarlo { trials, mean, halfwidth, errors })
}

/// Mean of `values` (exact for rationals).
pub fn mean<S: Scalar>(values: &[S]) -> S {
    scalar::sum(values.iter().cloned()) / S::from_usize(values.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptive::{AdaptivePolicy, Variant};
    use crate::harness::algo::{build_strategy, AlgoOptions, Algorithm};
    use crate::Exact;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn noiseless_cost_is_path_length() {
        let table = OdtnInstance::from_rows(&["++--", "+-+-"]).unwrap();
        let s = build_strategy(Algorithm::AdaptiveC, &table, &AlgoOptions::default()).unwrap();
        let exact = exact_strategy_cost(s.as_ref(), &table, 16).unwrap();
        assert_eq!(exact.expected, q(2, 1));
        assert_eq!(exact.error_rate, q(0, 1));
        let mc = monte_carlo_cost(s.as_ref(), &table, 50, 1).unwrap();
        assert_eq!(mc.mean, 2.0);
        assert_eq!(mc.halfwidth, 0.0);
    }

    #[test]
    fn exact_cost_matches_tree_cost() {
        let table = OdtnInstance::from_rows(&["+-*", "*+-", "-*+", "++-"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        let policy = AdaptivePolicy::new(Variant::ScoreC);
        let tree: Exact = policy_tree_cost(&inst, &policy).unwrap();
        let s = build_strategy(Algorithm::AdaptiveC, &table, &AlgoOptions::default()).unwrap();
        assert_eq!(exact_strategy_cost(s.as_ref(), &table, 16).unwrap().expected, tree);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let table = OdtnInstance::from_rows(&["+-*", "*+-", "-*+", "++-"]).unwrap();
        let s = build_strategy(Algorithm::AdaptiveR, &table, &AlgoOptions::default()).unwrap();
        assert_eq!(monte_carlo_cost(s.as_ref(), &table, 300, 9).unwrap(), monte_carlo_cost(s.as_ref(), &table, 300, 9).unwrap());
    }

    #[test]
    fn replayed_runs_agree() {
        let table = OdtnInstance::from_rows(&["+-*", "*+-", "-*+"]).unwrap();
        let s = build_strategy(Algorithm::Meta, &table, &AlgoOptions::default()).unwrap();
        let a = simulate_run(s.as_ref(), &table, 2, 5).unwrap();
        let b = simulate_run(s.as_ref(), &table, 2, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.test_count() <= table.n());
    }
}
