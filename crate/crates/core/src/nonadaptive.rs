//! Non-adaptive ranking: a single test order fixed in advance.
//!
//! Each step appends the element with the largest expected truncated gain
//!
//! ```text
//! G_E(e) = Σ_{(i,ω)} π_{i,ω} · (f_{i,ω}(E ∪ e) - f_{i,ω}(E)) / (1 - f_{i,ω}(E))
//! ```
//!
//! computed either exactly by enumerating star resolutions or by sampling.
//! Once the best score drops under `ε / (4 m² n⁴)` the remaining elements
//! are appended in index order.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adaptive::Policy;
use crate::coverage::{for_each_resolution, AsrnInstance};
use crate::error::{Error, Result};
use crate::model::{Observation, OdtnInstance, Response};
use crate::scalar::Scalar;
use crate::state::BeliefState;
use crate::transcript::Phase;

/// Star entries per scenario that exact enumeration accepts by default.
pub const DEFAULT_STAR_CAP: u32 = 16;

/// Gives all scenarios with `π_i <= n^{-2}` to the lowest-index one among
/// them. The table and coverage functions are untouched, so the merged
/// scenario keeps the responses and coverage of that lowest index.
pub fn merge_tiny_priors(inst: &AsrnInstance) -> Result<AsrnInstance> {
    let n = inst.n();
    if n <= 1 {
        return Ok(inst.clone());
    }
    let threshold = BigRational::new(BigInt::one(), BigInt::from(n * n));
    let prior = inst.table().prior();
    let tiny: Vec<usize> = (0..inst.m()).filter(|&i| prior[i] <= threshold).collect();
    let Some(&first) = tiny.first() else {
        return Ok(inst.clone());
    };
    let mut merged = prior.to_vec();
    let total: BigRational = tiny.iter().map(|&i| &prior[i]).sum();
    for &i in &tiny {
        merged[i] = BigRational::zero();
    }
    merged[first] = total;
    inst.with_table(inst.table().with_prior(merged)?)
}

/// `N = ⌈m³ n⁴ / ε⌉`, saturating at `u64::MAX`.
pub fn default_sample_count(m: usize, n: usize, eps: Ratio<u64>) -> u64 {
    let (m, n) = (m as u128, n as u128);
    let base = m.saturating_pow(3).saturating_mul(n.saturating_pow(4));
    let num = base.saturating_mul(*eps.denom() as u128);
    let den = *eps.numer() as u128;
    u64::try_from(num.div_ceil(den)).unwrap_or(u64::MAX)
}

/// `ε / (4 m² n⁴)`.
pub fn phase2_threshold(m: usize, n: usize, eps: Ratio<u64>) -> BigRational {
    let den = BigInt::from(4) * num_traits::pow(BigInt::from(m), 2) * num_traits::pow(BigInt::from(n), 4);
    BigRational::new(BigInt::from(*eps.numer()), BigInt::from(*eps.denom()) * den)
}

fn big(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// `Δ` of the last observation in `obs`.
fn truncated_gain(inst: &AsrnInstance, scenario: usize, obs: &[Observation]) -> Ratio<u64> {
    let (before, _) = obs.split_at(obs.len() - 1);
    let f0 = inst.value(scenario, before);
    if f0.is_one() {
        return Ratio::zero();
    }
    let f1 = inst.value(scenario, obs);
    (f1 - f0) / (Ratio::one() - f0)
}

/// Exact mean of a multiset of small rationals.
fn tally_sum(tally: &HashMap<Ratio<u64>, u64>) -> BigRational {
    tally.iter().map(|(v, &c)| big(*v) * BigRational::from_integer(BigInt::from(c))).sum()
}

fn check_element(inst: &AsrnInstance, selected: &[usize], element: usize) -> Result<()> {
    if element >= inst.n() {
        return Err(Error::Domain(format!("element {element} out of range")));
    }
    if selected.contains(&element) {
        return Err(Error::AlreadySelected(element));
    }
    Ok(())
}

/// `G_E(e)` by enumerating the star resolutions of `E ∪ {e}`.
pub fn exact_gain(inst: &AsrnInstance, selected: &[usize], element: usize, cap: u32) -> Result<BigRational> {
    check_element(inst, selected, element)?;
    let table = inst.table();
    let mut elements = selected.to_vec();
    elements.push(element);
    let omega = BigInt::from(inst.omega());
    let mut total = BigRational::zero();
    for i in 0..inst.m() {
        let prior = &table.prior()[i];
        if !prior.is_positive() {
            continue;
        }
        let stars = elements.iter().filter(|&&e| table.response(e, i).is_star()).count() as u32;
        if stars > cap {
            return Err(Error::infeasible(format!("gain enumeration for scenario {i}"), stars, cap));
        }
        let mut tally = HashMap::new();
        for_each_resolution(table, i, &elements, |obs| {
            *tally.entry(truncated_gain(inst, i, obs)).or_insert(0u64) += 1;
        });
        let weight = BigRational::new(BigInt::one(), num_traits::pow(omega.clone(), stars as usize));
        total += prior * weight * tally_sum(&tally);
    }
    Ok(total)
}

/// Samples scenarios by prior mass; a small helper so the weighted table is
/// built once per ranking.
#[derive(Clone, Debug)]
pub struct ScenarioSampler {
    index: WeightedIndex<f64>,
}

impl ScenarioSampler {
    pub fn new(table: &OdtnInstance) -> Result<Self> {
        let weights: Vec<f64> = table.prior().iter().map(crate::model::ratio_to_f64).collect();
        let index = WeightedIndex::new(weights).map_err(|e| Error::Domain(format!("prior cannot be sampled: {e}")))?;
        Ok(ScenarioSampler { index })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

/// Mean of `samples` draws of `Δ_E(i, ω; e)`, with `i ~ π` and each star on
/// `E ∪ {e}` resolved uniformly. Exact rational mean of the drawn values.
pub fn sampled_gain<R: Rng + ?Sized>(
    inst: &AsrnInstance,
    sampler: &ScenarioSampler,
    selected: &[usize],
    element: usize,
    samples: u64,
    rng: &mut R,
) -> Result<BigRational> {
    check_element(inst, selected, element)?;
    if samples == 0 {
        return Err(Error::Domain("sample count must be positive".into()));
    }
    let table = inst.table();
    let omega = inst.omega();
    let mut elements = selected.to_vec();
    elements.push(element);
    let mut obs: Vec<Observation> = Vec::with_capacity(elements.len());
    let mut tally = HashMap::new();
    for _ in 0..samples {
        let i = sampler.sample(rng);
        obs.clear();
        for &e in &elements {
            let o = match table.response(e, i) {
                Response::Det(o) => o,
                Response::Star => rng.random_range(0..omega),
            };
            obs.push((e, o));
        }
        *tally.entry(truncated_gain(inst, i, &obs)).or_insert(0u64) += 1;
    }
    Ok(tally_sum(&tally) / BigRational::from_integer(BigInt::from(samples)))
}

/// Independent stream for one estimate, fixed by `(seed, step, element)`.
pub fn estimate_rng(seed: u64, step: usize, element: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((step as u64) << 32) | element as u64);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GainEstimator {
    Exact { cap: u32 },
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankingResult {
    pub permutation: Vec<usize>,
    /// Position where index-order filling began, if it did.
    pub phase2_start: Option<usize>,
    pub sample_count: Option<u64>,
    /// Winning score of each greedy step.
    #[serde(skip)]
    pub scores: Vec<BigRational>,
}

/// Greedy ranking with the small-score fallback.
pub fn build_permutation(inst: &AsrnInstance, estimator: GainEstimator) -> Result<RankingResult> {
    let n = inst.n();
    let m = inst.table().positive_prior_count();
    let threshold = phase2_threshold(m, n, inst.separability());
    let sampler = match estimator {
        GainEstimator::Sampled { .. } => Some(ScenarioSampler::new(inst.table())?),
        GainEstimator::Exact { .. } => None,
    };
    let mut permutation = Vec::with_capacity(n);
    let mut scores = Vec::new();
    let mut phase2_start = None;
    while permutation.len() < n {
        let step = permutation.len();
        let candidates: Vec<usize> = (0..n).filter(|e| !permutation.contains(e)).collect();
        let gains: Vec<BigRational> = candidates
            .par_iter()
            .map(|&e| match estimator {
                GainEstimator::Exact { cap } => exact_gain(inst, &permutation, e, cap),
                GainEstimator::Sampled { samples, seed } => {
                    let mut rng = estimate_rng(seed, step, e);
                    sampled_gain(inst, sampler.as_ref().expect("sampler built"), &permutation, e, samples, &mut rng)
                }
            })
            .collect::<Result<_>>()?;
        let mut best = 0;
        for k in 1..gains.len() {
            if gains[k] > gains[best] {
                best = k;
            }
        }
        if gains[best] < threshold {
            phase2_start = Some(step);
            permutation.extend(candidates);
            break;
        }
        permutation.push(candidates[best]);
        scores.push(gains[best].clone());
    }
    let sample_count = match estimator {
        GainEstimator::Sampled { samples, .. } => Some(samples),
        GainEstimator::Exact { .. } => None,
    };
    Ok(RankingResult { permutation, phase2_start, sample_count, scores })
}

/// `Σ_i π_i Pr_ω[f_{i,ω}(elements) < 1]`.
pub fn uncovered_mass(inst: &AsrnInstance, elements: &[usize], cap: u32) -> Result<BigRational> {
    let table = inst.table();
    let omega = BigInt::from(inst.omega());
    let mut total = BigRational::zero();
    for i in 0..inst.m() {
        let prior = &table.prior()[i];
        if !prior.is_positive() {
            continue;
        }
        let stars = elements.iter().filter(|&&e| table.response(e, i).is_star()).count() as u32;
        if stars > cap {
            return Err(Error::infeasible(format!("cost enumeration for scenario {i}"), stars, cap));
        }
        let mut open = 0u64;
        for_each_resolution(table, i, elements, |obs| {
            if !inst.is_covered(i, obs) {
                open += 1;
            }
        });
        if open > 0 {
            total += prior * BigRational::new(BigInt::from(open), num_traits::pow(omega.clone(), stars as usize));
        }
    }
    Ok(total)
}

pub fn check_permutation(n: usize, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &e in order {
        if e >= n || std::mem::replace(&mut seen[e], true) {
            return Err(Error::Domain(format!("{order:?} is not a permutation of 0..{n}")));
        }
    }
    if order.len() != n {
        return Err(Error::Domain(format!("{order:?} is not a permutation of 0..{n}")));
    }
    Ok(())
}

/// Expected cover time of a fixed order. A scenario never covered counts
/// `n`.
pub fn permutation_cost(inst: &AsrnInstance, order: &[usize], cap: u32) -> Result<BigRational> {
    check_permutation(inst.n(), order)?;
    let mut cost = BigRational::zero();
    for k in 0..order.len() {
        let open = uncovered_mass(inst, &order[..k], cap)?;
        if open.is_zero() {
            break;
        }
        cost += open;
    }
    Ok(cost)
}

/// Follows a fixed order and stops once every compatible scenario is
/// covered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedOrder {
    pub name: String,
    pub order: Vec<usize>,
}

impl<S: Scalar> Policy<S> for FixedOrder {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn next(&self, state: &BeliefState<'_, S>) -> Result<Option<usize>> {
        if state.all_covered() {
            return Ok(None);
        }
        Ok(self.order.iter().copied().find(|&e| !state.is_selected(e)))
    }

    fn next_step(&self, state: &BeliefState<'_, S>) -> Result<Option<(usize, Phase)>> {
        Ok(Policy::<S>::next(self, state)?.map(|e| (e, Phase::Fixed)))
    }
}
