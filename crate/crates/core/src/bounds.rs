//! Exact optima and lower bounds for small instances.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::Policy;
use crate::coverage::AsrnInstance;
use crate::document::format_rational;
use crate::error::{Error, Result};
use crate::model::{ratio_to_f64, OdtnInstance, Response};
use crate::nonadaptive::uncovered_mass;
use crate::scalar::Scalar;
use crate::state::BeliefState;
use crate::stop::StopRule;

pub const BOUNDS_SCHEMA: &str = "odtn.bounds/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Largest `n` for the adaptive optimum.
    pub dp_max_n: usize,
    /// Largest number of memoized states for the adaptive optimum.
    pub dp_states: usize,
    /// Largest `m` for the per-hypothesis set-cover optima.
    pub ssc_max_m: usize,
    /// Largest `n` for the best fixed order.
    pub perm_max_n: usize,
    /// Star entries per scenario that enumeration accepts.
    pub stars: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { dp_max_n: 10, dp_states: 10_000_000, ssc_max_m: 13, perm_max_n: 8, stars: 16 }
    }
}

/// State key: selected elements plus either the alive set (elimination
/// coverage, where masses and coverage follow from those two) or the
/// observed outcomes.
type Key = (u64, u128);

fn state_key<S: Scalar>(state: &BeliefState<'_, S>, by_alive: bool) -> Key {
    let inst = state.instance();
    let mut selected = 0u64;
    for &(e, _) in state.selected() {
        selected |= 1 << e;
    }
    let tag = if by_alive {
        (0..inst.m()).filter(|&i| state.is_alive(i)).fold(0u128, |acc, i| acc | 1 << i)
    } else {
        let omega = inst.omega() as u128;
        let mut sorted = state.selected().to_vec();
        sorted.sort_unstable();
        sorted.iter().fold(0u128, |acc, &(_, o)| acc * omega + o as u128)
    };
    (selected, tag)
}

fn keyable(inst: &AsrnInstance) -> Result<bool> {
    let by_alive = inst.coverage().elimination_quota().is_some();
    if inst.n() > 64 {
        return Err(Error::infeasible("optimal policy (elements)", inst.n(), 64));
    }
    if by_alive && inst.m() > 128 {
        return Err(Error::infeasible("optimal policy (scenarios)", inst.m(), 128));
    }
    if !by_alive && (inst.n() as f64) * (inst.omega() as f64).log2() > 127.0 {
        return Err(Error::infeasible("optimal policy (outcome encoding)", inst.n(), 127));
    }
    Ok(by_alive)
}

/// Exact optimal adaptive policy found by dynamic programming.
#[derive(Clone, Debug)]
pub struct OptimalPolicy {
    pub cost: BigRational,
    decisions: HashMap<Key, Option<usize>>,
    by_alive: bool,
    stop: StopRule,
}

impl OptimalPolicy {
    pub fn state_count(&self) -> usize {
        self.decisions.len()
    }
}

impl<S: Scalar> Policy<S> for OptimalPolicy {
    fn name(&self) -> String {
        "optimal".into()
    }

    fn next(&self, state: &BeliefState<'_, S>) -> Result<Option<usize>> {
        if self.stop.is_satisfied(state) {
            return Ok(None);
        }
        match self.decisions.get(&state_key(state, self.by_alive)) {
            Some(d) => Ok(*d),
            // only zero-mass states are missing from the table
            None => Ok(state.unselected().next()),
        }
    }
}

struct Dp<'a> {
    stop: &'a StopRule,
    by_alive: bool,
    cap: usize,
    memo: HashMap<Key, (BigRational, Option<usize>)>,
}

impl Dp<'_> {
    fn solve(&mut self, state: &BeliefState<'_, BigRational>) -> Result<BigRational> {
        // masses only shrink, so nothing is charged below a free state
        let charged = self.stop.charged_mass(state);
        if charged.is_zero() {
            return Ok(BigRational::zero());
        }
        let key = state_key(state, self.by_alive);
        if let Some((v, _)) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        if self.memo.len() >= self.cap {
            return Err(Error::infeasible("optimal policy states", self.memo.len() + 1, self.cap));
        }
        let omega = state.instance().omega();
        let mut best: Option<(BigRational, usize)> = None;
        for e in state.unselected().collect::<Vec<_>>() {
            let mut total = BigRational::zero();
            for o in 0..omega {
                let child = state.observe(e, o)?;
                if child.alive_mass().is_zero() {
                    continue;
                }
                total += self.solve(&child)?;
                if best.as_ref().is_some_and(|(b, _)| total >= *b) {
                    break;
                }
            }
            if best.as_ref().is_none_or(|(b, _)| total < *b) {
                best = Some((total, e));
            }
        }
        let Some((rest, e)) = best else {
            return Err(Error::Domain("coverage is infeasible: scenarios remain uncovered after every element".into()));
        };
        let value = charged + rest;
        self.memo.insert(key, (value.clone(), Some(e)));
        Ok(value)
    }
}

/// `V = U + min_e Σ_o V(child)` where `U` is the unconditional mass still
/// paying at the state.
pub fn optimal_policy_cost(inst: &AsrnInstance, stop: &StopRule, caps: &Caps) -> Result<OptimalPolicy> {
    if inst.n() > caps.dp_max_n {
        return Err(Error::infeasible("optimal policy (elements)", inst.n(), caps.dp_max_n));
    }
    let by_alive = keyable(inst)?;
    let mut dp = Dp { stop, by_alive, cap: caps.dp_states, memo: HashMap::new() };
    let root = BeliefState::<BigRational>::new(inst);
    let cost = dp.solve(&root)?;
    let decisions = dp.memo.into_iter().map(|(k, (_, d))| (k, d)).collect();
    Ok(OptimalPolicy { cost, decisions, by_alive, stop: stop.clone() })
}

/// Optimum of the stochastic set cover instance seen by hypothesis `i`:
/// covering the other hypotheses, where test `T` removes the hypotheses
/// contradicting `i`'s outcome (resampled on each use when `i` has a `*`).
pub fn opt_ssc_exact(table: &OdtnInstance, i: usize, max_m: usize) -> Result<BigRational> {
    let m = table.m();
    if m > max_m || m > 31 {
        return Err(Error::infeasible("set cover optimum (hypotheses)", m, max_m.min(31)));
    }
    let omega = table.alphabet().len();
    let q = BigRational::new(BigInt::one(), BigInt::from(omega));
    let universe: u32 = ((1u64 << m) - 1) as u32 & !(1u32 << i);
    // outcome distributions per test as (probability, removed mask)
    let moves: Vec<Vec<(BigRational, u32)>> = (0..table.n())
        .map(|t| {
            let removed = |o: usize| (0..m).filter(|&j| table.response(t, j).contradicts(o)).fold(0u32, |acc, j| acc | 1 << j);
            match table.response(t, i) {
                Response::Det(o) => vec![(BigRational::one(), removed(o))],
                Response::Star => (0..omega).map(|o| (q.clone(), removed(o))).collect(),
            }
        })
        .collect();
    let mut value: Vec<Option<BigRational>> = vec![None; 1 << m];
    value[0] = Some(BigRational::zero());
    // submasks of U are numerically smaller, so increasing order works
    let mut u = universe;
    let mut order = Vec::new();
    loop {
        order.push(u);
        if u == 0 {
            break;
        }
        u = (u - 1) & universe;
    }
    order.reverse();
    for &u in order.iter().skip(1) {
        let mut best: Option<BigRational> = None;
        for outcomes in &moves {
            let mut stay = BigRational::zero();
            let mut rest = BigRational::one();
            for (p, removed) in outcomes {
                let next = u & !removed;
                if next == u {
                    stay += p;
                } else {
                    rest += p * value[next as usize].as_ref().expect("submask solved first");
                }
            }
            if stay.is_one() {
                continue;
            }
            let v = rest / (BigRational::one() - stay);
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
        match best {
            Some(v) => value[u as usize] = Some(v),
            None => return Err(Error::NotIdentifiable(i, (0..m).find(|&j| u >> j & 1 == 1).unwrap_or(i))),
        }
    }
    Ok(value[universe as usize].clone().expect("universe solved"))
}

/// `Σ_i π_i · OPT_SSC(i)`.
pub fn ssc_lower_bound(table: &OdtnInstance, max_m: usize) -> Result<BigRational> {
    let parts: Vec<BigRational> = (0..table.m())
        .into_par_iter()
        .map(|i| {
            if table.prior()[i].is_positive() {
                opt_ssc_exact(table, i, max_m).map(|v| v * &table.prior()[i])
            } else {
                Ok(BigRational::zero())
            }
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().sum())
}

/// `Σ_i π_i log_|Ω|(1/π_i)`.
pub fn entropy_lower_bound(table: &OdtnInstance) -> f64 {
    let base = (table.alphabet().len() as f64).ln();
    table
        .prior()
        .iter()
        .map(ratio_to_f64)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln() / base)
        .sum()
}

/// `⌈(m - 1) / e⌉` where `e` is the most hypotheses one observation can
/// rule out.
pub fn sparsity_lower_bound(table: &OdtnInstance) -> Result<u64> {
    let m = table.m();
    if m < 2 {
        return Err(Error::Degenerate(format!("sparsity bound needs m >= 2, got {m}")));
    }
    let e = table.max_elimination();
    if e == 0 {
        return Err(Error::NotIdentifiable(0, 1));
    }
    Ok((m as u64 - 1).div_ceil(e as u64))
}

/// Best fixed order, by dynamic programming over selected subsets.
pub fn brute_force_nonadaptive_opt(inst: &AsrnInstance, caps: &Caps) -> Result<(BigRational, Vec<usize>)> {
    let n = inst.n();
    if n > caps.perm_max_n {
        return Err(Error::infeasible("best fixed order (elements)", n, caps.perm_max_n));
    }
    let full = (1usize << n) - 1;
    let mut best: Vec<(BigRational, usize)> = vec![(BigRational::zero(), usize::MAX); 1 << n];
    for set in (0..full).rev() {
        let elements: Vec<usize> = (0..n).filter(|e| set >> e & 1 == 1).collect();
        let open = uncovered_mass(inst, &elements, caps.stars)?;
        if open.is_zero() {
            continue;
        }
        let (rest, e) = (0..n)
            .filter(|e| set >> e & 1 == 0)
            .map(|e| (best[set | 1 << e].0.clone(), e))
            .reduce(|a, b| if b.0 < a.0 { b } else { a })
            .expect("set is not full");
        best[set] = (open + rest, e);
    }
    let mut order = Vec::with_capacity(n);
    let mut set = 0usize;
    while order.len() < n {
        let e = match best[set].1 {
            usize::MAX => (0..n).find(|e| set >> e & 1 == 0).expect("set is not full"),
            e => e,
        };
        order.push(e);
        set |= 1 << e;
    }
    Ok((best[0].0.clone(), order))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub exact: String,
    pub value: f64,
}

impl BoundValue {
    pub fn new(v: &BigRational) -> Self {
        BoundValue { exact: format_rational(v), value: ratio_to_f64(v) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub schema: String,
    pub m: usize,
    pub n: usize,
    pub opt_adaptive: Option<BoundValue>,
    pub ssc_lb: Option<BoundValue>,
    pub entropy_lb: f64,
    pub sparsity_lb: Option<u64>,
    pub opt_nonadaptive: Option<BoundValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_nonadaptive_order: Option<Vec<usize>>,
    pub dp_states: Option<usize>,
    /// Why a bound is missing.
    pub skipped: Vec<String>,
}

impl BoundsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bounds reports always serialize")
    }
}

fn keep<T>(what: &str, r: Result<T>, skipped: &mut Vec<String>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::Infeasible { .. } | Error::NotIdentifiable(..) | Error::Degenerate(_))) => {
            skipped.push(format!("{what}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Every bound for an identification instance; infeasible ones are listed
/// in `skipped`.
pub fn compute_bounds(table: &OdtnInstance, caps: &Caps) -> Result<BoundsReport> {
    let inst = AsrnInstance::odtn(table)?;
    let mut skipped = Vec::new();
    let identifiable = || match table.identifiability_witness() {
        Some((i, j)) => Err(Error::NotIdentifiable(i, j)),
        None => Ok(()),
    };
    let opt = keep("opt_adaptive", identifiable().and_then(|_| optimal_policy_cost(&inst, &StopRule::AllCovered, caps)), &mut skipped)?;
    let ssc = keep("ssc_lb", identifiable().and_then(|_| ssc_lower_bound(table, caps.ssc_max_m)), &mut skipped)?;
    let sparsity = keep("sparsity_lb", identifiable().and_then(|_| sparsity_lower_bound(table)), &mut skipped)?;
    let perm = keep("opt_nonadaptive", identifiable().and_then(|_| brute_force_nonadaptive_opt(&inst, caps)), &mut skipped)?;
    Ok(BoundsReport {
        schema: BOUNDS_SCHEMA.into(),
        m: table.m(),
        n: table.n(),
        dp_states: opt.as_ref().map(|p| p.state_count()),
        opt_adaptive: opt.as_ref().map(|p| BoundValue::new(&p.cost)),
        ssc_lb: ssc.as_ref().map(BoundValue::new),
        entropy_lb: entropy_lower_bound(table),
        sparsity_lb: sparsity,
        opt_nonadaptive: perm.as_ref().map(|(c, _)| BoundValue::new(c)),
        opt_nonadaptive_order: perm.map(|(_, o)| o),
        skipped,
    })
}
