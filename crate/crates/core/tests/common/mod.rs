//! Brute-force reference computations over explicitly enumerated expanded
//! scenarios, shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use odtn::harness::generate::{generate_instance, GenParams, Kind, PriorKind};
use odtn::model::Response;
use odtn::OdtnInstance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// A hypothesis together with a full outcome vector.
#[derive(Clone, Debug)]
pub struct Expanded {
    pub hyp: usize,
    pub outcomes: Vec<usize>,
    pub mass: BigRational,
}

impl Expanded {
    pub fn agrees(&self, observed: &[(usize, usize)]) -> bool {
        observed.iter().all(|&(t, o)| self.outcomes[t] == o)
    }
}

/// Every expanded scenario, stars filled in odometer order.
pub fn expand(table: &OdtnInstance) -> Vec<Expanded> {
    let omega = table.alphabet().len();
    let mut out = Vec::new();
    for i in 0..table.m() {
        let stars: Vec<usize> = (0..table.n()).filter(|&t| table.response(t, i) == Response::Star).collect();
        let copies = omega.pow(stars.len() as u32);
        let mass = &table.prior()[i] / int(copies);
        for code in 0..copies {
            let mut rest = code;
            let mut outcomes = vec![0; table.n()];
            for t in 0..table.n() {
                if let Response::Det(o) = table.response(t, i) {
                    outcomes[t] = o;
                }
            }
            for &t in &stars {
                outcomes[t] = rest % omega;
                rest /= omega;
            }
            out.push(Expanded { hyp: i, outcomes, mass: mass.clone() });
        }
    }
    out
}

/// Fraction of the other hypotheses that some observation contradicts.
pub fn coverage(table: &OdtnInstance, i: usize, observed: &[(usize, usize)]) -> BigRational {
    let m = table.m();
    let ruled_out = (0..m)
        .filter(|&j| j != i)
        .filter(|&j| observed.iter().any(|&(t, o)| matches!(table.response(t, j), Response::Det(d) if d != o)))
        .count();
    BigRational::new(BigInt::from(ruled_out), BigInt::from(m - 1))
}

pub fn with(observed: &[(usize, usize)], extra: (usize, usize)) -> Vec<(usize, usize)> {
    let mut v = observed.to_vec();
    v.push(extra);
    v
}

/// Sum over compatible uncovered expanded scenarios of
/// `mass * (f(E + e) - f(E)) / (1 - f(E))`.
pub fn second_term(table: &OdtnInstance, scenarios: &[Expanded], observed: &[(usize, usize)], e: usize) -> BigRational {
    let mut total = BigRational::zero();
    for x in scenarios.iter().filter(|x| x.agrees(observed)) {
        let now = coverage(table, x.hyp, observed);
        if now == BigRational::one() {
            continue;
        }
        let after = coverage(table, x.hyp, &with(observed, (e, x.outcomes[e])));
        total += &x.mass * (after - &now) / (BigRational::one() - now);
    }
    total
}

/// Compatible uncovered expanded scenarios minus the largest outcome branch
/// (by count, ties to the lowest outcome), by mass.
pub fn first_term_c(table: &OdtnInstance, scenarios: &[Expanded], observed: &[(usize, usize)], e: usize) -> BigRational {
    let omega = table.alphabet().len();
    let mut count = vec![0usize; omega];
    let mut mass = vec![BigRational::zero(); omega];
    for x in scenarios.iter().filter(|x| x.agrees(observed)) {
        if coverage(table, x.hyp, observed) == BigRational::one() {
            continue;
        }
        count[x.outcomes[e]] += 1;
        mass[x.outcomes[e]] += &x.mass;
    }
    let mut b = 0;
    for o in 1..omega {
        if count[o] > count[b] {
            b = o;
        }
    }
    let total: BigRational = mass.iter().sum();
    total - &mass[b]
}

/// Compatible mass of every hypothesis, normalized.
pub fn posterior(table: &OdtnInstance, scenarios: &[Expanded], observed: &[(usize, usize)]) -> Option<Vec<BigRational>> {
    let mut mass = vec![BigRational::zero(); table.m()];
    for x in scenarios.iter().filter(|x| x.agrees(observed)) {
        mass[x.hyp] += &x.mass;
    }
    let total: BigRational = mass.iter().sum();
    if total.is_zero() {
        return None;
    }
    Some(mass.into_iter().map(|p| p / &total).collect())
}

/// Number of compatible expanded copies of each hypothesis.
pub fn counts(table: &OdtnInstance, scenarios: &[Expanded], observed: &[(usize, usize)]) -> Vec<usize> {
    let mut c = vec![0; table.m()];
    for x in scenarios.iter().filter(|x| x.agrees(observed)) {
        c[x.hyp] += 1;
    }
    c
}

/// Optimal expected cover time by exhaustive search over decision trees.
pub fn optimal_cost(table: &OdtnInstance) -> Option<BigRational> {
    fn go(table: &OdtnInstance, live: &[&Expanded], observed: &mut Vec<(usize, usize)>) -> Option<BigRational> {
        let pending: Vec<&&Expanded> =
            live.iter().filter(|x| coverage(table, x.hyp, observed) != BigRational::one()).collect();
        if pending.is_empty() {
            return Some(BigRational::zero());
        }
        let charged: BigRational = pending.iter().map(|x| x.mass.clone()).sum();
        let mut best: Option<BigRational> = None;
        let free: Vec<usize> = (0..table.n()).filter(|&e| observed.iter().all(|&(t, _)| t != e)).collect();
        for e in free {
            let mut total = BigRational::zero();
            let mut feasible = true;
            for o in 0..table.alphabet().len() {
                let child: Vec<&Expanded> = live.iter().copied().filter(|x| x.outcomes[e] == o).collect();
                if child.is_empty() {
                    continue;
                }
                observed.push((e, o));
                let v = go(table, &child, observed);
                observed.pop();
                match v {
                    Some(v) => total += v,
                    None => {
                        feasible = false;
                        break;
                    }
                }
            }
            if feasible && best.as_ref().is_none_or(|b| total < *b) {
                best = Some(total);
            }
        }
        best.map(|b| b + charged)
    }
    let all = expand(table);
    let refs: Vec<&Expanded> = all.iter().collect();
    go(table, &refs, &mut Vec::new())
}

/// Expected cover time of a fixed order: a scenario pays for every element
/// up to and including the one that covers it.
pub fn order_cost(table: &OdtnInstance, order: &[usize]) -> Option<BigRational> {
    let mut total = BigRational::zero();
    for x in expand(table) {
        let mut observed = Vec::new();
        let mut steps = None;
        if coverage(table, x.hyp, &observed) == BigRational::one() {
            steps = Some(0);
        }
        for (k, &e) in order.iter().enumerate() {
            if steps.is_some() {
                break;
            }
            observed.push((e, x.outcomes[e]));
            if coverage(table, x.hyp, &observed) == BigRational::one() {
                steps = Some(k + 1);
            }
        }
        total += &x.mass * int(steps?);
    }
    Some(total)
}

/// Lowest cost over all `n!` orders.
pub fn best_order_cost(table: &OdtnInstance) -> Option<BigRational> {
    fn permute(k: usize, order: &mut Vec<usize>, table: &OdtnInstance, best: &mut Option<BigRational>) {
        if k == order.len() {
            if let Some(c) = order_cost(table, order) {
                if best.as_ref().is_none_or(|b| c < *b) {
                    *best = Some(c);
                }
            }
            return;
        }
        for j in k..order.len() {
            order.swap(k, j);
            permute(k + 1, order, table, best);
            order.swap(k, j);
        }
    }
    let mut order: Vec<usize> = (0..table.n()).collect();
    let mut best = None;
    permute(0, &mut order, table, &mut best);
    best
}

/// Seeded small identifiable instances: `m <= max_m`, `n <= max_n`, at most
/// `max_stars` stars per hypothesis, binary or ternary outcomes, uniform or
/// Dirichlet priors.
pub fn tiny_corpus(count: usize, max_m: usize, max_n: usize, max_stars: usize, seed: u64) -> Vec<OdtnInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let m = rng.random_range(2..=max_m);
        let n = rng.random_range(2..=max_n);
        let outcomes = if rng.random_bool(0.2) { 3 } else { 2 };
        let c = rng.random_range(0..=max_stars.min(n));
        let r = rng.random_range(1..=m);
        let params = GenParams {
            kind: Kind::LowNoise { c, r },
            m,
            n,
            outcomes,
            prior: if rng.random_bool(0.5) { PriorKind::Uniform } else { PriorKind::Dirichlet { concentration: 1.0 } },
            seed: rng.random(),
        };
        if let Ok(inst) = generate_instance(&params) {
            out.push(inst);
        }
    }
    out
}

/// Calls `visit` on every state the policy reaches with positive mass, in
/// depth-first order.
pub fn walk_policy<'a>(
    inst: &'a odtn::AsrnInstance,
    policy: &dyn odtn::Policy<BigRational>,
    visit: &mut dyn FnMut(&odtn::BeliefState<'a, BigRational>),
) -> odtn::Result<()> {
    fn go<'a>(
        state: &odtn::BeliefState<'a, BigRational>,
        policy: &dyn odtn::Policy<BigRational>,
        visit: &mut dyn FnMut(&odtn::BeliefState<'a, BigRational>),
    ) -> odtn::Result<()> {
        visit(state);
        let Some(e) = policy.next(state)? else { return Ok(()) };
        for o in 0..state.instance().omega() {
            let child = state.observe(e, o)?;
            if child.alive_count() > 0 && !child.alive_mass().is_zero() {
                go(&child, policy, visit)?;
            }
        }
        Ok(())
    }
    go(&odtn::BeliefState::new(inst), policy, visit)
}
