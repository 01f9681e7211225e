//! Coverage functions `f_i` over observed `(element, outcome)` pairs and the
//! general instance type that pairs them with a response table.

use std::fmt::Debug;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Observation, OdtnInstance, Response};

/// A monotone submodular map from observed pairs to `[0, 1]`, one per
/// scenario. Value `1` means the scenario is covered.
pub trait CoverageFunction: Debug + Send + Sync {
    fn name(&self) -> &str;

    fn value(&self, table: &OdtnInstance, scenario: usize, observed: &[Observation]) -> Ratio<u64>;

    /// `Some(q)` when the value is `min(#eliminated other hypotheses, q)/q`.
    /// Lets callers evaluate coverage from compatible-set sizes alone.
    fn elimination_quota(&self) -> Option<usize> {
        None
    }
}

/// `min(|{j != i ruled out by S}|, quota) / quota`.
///
/// With `quota = m - 1` this is the ODTN identification coverage; with
/// `quota = m - d - 1` it is the relaxed coverage used when hypotheses may be
/// pairwise inseparable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationCoverage {
    quota: usize,
    name: &'static str,
}

impl EliminationCoverage {
    pub fn odtn(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Degenerate(format!("elimination coverage needs m >= 2, got {m}")));
        }
        Ok(EliminationCoverage { quota: m - 1, name: "odtn-elimination" })
    }

    /// Covered once at most `d + 1` hypotheses remain compatible.
    pub fn relaxed(m: usize, d: usize) -> Result<Self> {
        if m < d + 2 {
            return Err(Error::Degenerate(format!("relaxed coverage needs m >= d + 2 (m = {m}, d = {d})")));
        }
        Ok(EliminationCoverage { quota: m - d - 1, name: "relaxed-elimination" })
    }

    pub fn quota(&self) -> usize {
        self.quota
    }
}

impl CoverageFunction for EliminationCoverage {
    fn name(&self) -> &str {
        self.name
    }

    fn value(&self, table: &OdtnInstance, scenario: usize, observed: &[Observation]) -> Ratio<u64> {
        let eliminated = table.eliminated_count(scenario, observed).min(self.quota);
        Ratio::new(eliminated as u64, self.quota as u64)
    }

    fn elimination_quota(&self) -> Option<usize> {
        Some(self.quota)
    }
}

/// Weighted coverage toy family: each `(element, outcome)` pair covers a set
/// of weighted items and scenario `i` needs the items in its target set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedCoverage {
    weights: Vec<u64>,
    targets: Vec<Vec<usize>>,
    /// `covers[e][o]`: items covered by observing `o` on element `e`.
    covers: Vec<Vec<Vec<usize>>>,
}

impl WeightedCoverage {
    pub fn new(weights: Vec<u64>, targets: Vec<Vec<usize>>, covers: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let items = weights.len();
        let in_range = |set: &Vec<usize>| set.iter().all(|&k| k < items);
        if !targets.iter().all(in_range) || !covers.iter().flatten().all(in_range) {
            return Err(Error::Domain("weighted coverage refers to an unknown item".into()));
        }
        if weights.contains(&0) {
            return Err(Error::Domain("item weights must be positive".into()));
        }
        if targets.iter().any(|t| t.is_empty()) {
            return Err(Error::Domain("every scenario needs a non-empty target".into()));
        }
        Ok(WeightedCoverage { weights, targets, covers })
    }

    /// Random feasible member of the family for `table`: every element
    /// covers a core set regardless of outcome, and the cores jointly cover
    /// all items; outcomes add extra items on top.
    pub fn random(table: &OdtnInstance, items: usize, seed: u64) -> Result<Self> {
        if items == 0 || table.n() == 0 {
            return Err(Error::Domain("random weighted coverage needs items and elements".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<u64> = (0..items).map(|_| rng.random_range(1..=4)).collect();
        let mut cores: Vec<Vec<usize>> = vec![Vec::new(); table.n()];
        for k in 0..items {
            cores[rng.random_range(0..table.n())].push(k);
        }
        let covers = cores
            .into_iter()
            .map(|core| {
                (0..table.alphabet().len())
                    .map(|_| {
                        let mut set = core.clone();
                        if rng.random_bool(0.5) {
                            let extra = rng.random_range(0..items);
                            if !set.contains(&extra) {
                                set.push(extra);
                            }
                        }
                        set.sort_unstable();
                        set
                    })
                    .collect()
            })
            .collect();
        let targets = (0..table.m())
            .map(|_| {
                let mut all: Vec<usize> = (0..items).collect();
                all.shuffle(&mut rng);
                let keep = rng.random_range(1..=items);
                let mut t = all[..keep].to_vec();
                t.sort_unstable();
                t
            })
            .collect();
        WeightedCoverage::new(weights, targets, covers)
    }
}

impl CoverageFunction for WeightedCoverage {
    fn name(&self) -> &str {
        "weighted-coverage"
    }

    fn value(&self, _table: &OdtnInstance, scenario: usize, observed: &[Observation]) -> Ratio<u64> {
        let target = &self.targets[scenario];
        let total: u64 = target.iter().map(|&k| self.weights[k]).sum();
        let covered: u64 = target
            .iter()
            .filter(|k| observed.iter().any(|&(e, o)| self.covers[e][o].contains(k)))
            .map(|&k| self.weights[k])
            .sum();
        Ratio::new(covered, total)
    }
}

/// General instance: a response table with a coverage function per scenario
/// and a declared separability.
#[derive(Clone, Debug)]
pub struct AsrnInstance {
    table: OdtnInstance,
    coverage: Arc<dyn CoverageFunction>,
    separability: Ratio<u64>,
}

impl AsrnInstance {
    pub fn new(table: OdtnInstance, coverage: Arc<dyn CoverageFunction>, separability: Ratio<u64>) -> Result<Self> {
        if separability.is_zero() || separability > Ratio::one() {
            return Err(Error::Domain(format!("separability must be in (0, 1], got {separability}")));
        }
        Ok(AsrnInstance { table, coverage, separability })
    }

    /// The identification problem: elimination coverage with `ε = 1/(m-1)`.
    pub fn odtn(table: &OdtnInstance) -> Result<Self> {
        let coverage = EliminationCoverage::odtn(table.m())?;
        let eps = table.separability()?;
        AsrnInstance::new(table.clone(), Arc::new(coverage), eps)
    }

    /// Relaxed identification: covered once at most `d + 1` hypotheses
    /// remain, `ε = 1/(m-d-1)`.
    pub fn relaxed(table: &OdtnInstance, d: usize) -> Result<Self> {
        let coverage = EliminationCoverage::relaxed(table.m(), d)?;
        let eps = Ratio::new(1, coverage.quota() as u64);
        AsrnInstance::new(table.clone(), Arc::new(coverage), eps)
    }

    /// Wraps `coverage` and measures its separability by enumerating every
    /// subset of consistent observations (desk-scale only).
    pub fn with_measured_separability(table: OdtnInstance, coverage: Arc<dyn CoverageFunction>, cap: u32) -> Result<Self> {
        let eps = measure_separability(&table, coverage.as_ref(), cap)?
            .ok_or_else(|| Error::Domain("coverage function never increases".into()))?;
        AsrnInstance::new(table, coverage, eps)
    }

    pub fn table(&self) -> &OdtnInstance {
        &self.table
    }

    pub fn coverage(&self) -> &dyn CoverageFunction {
        self.coverage.as_ref()
    }

    pub fn separability(&self) -> Ratio<u64> {
        self.separability
    }

    pub fn m(&self) -> usize {
        self.table.m()
    }

    pub fn n(&self) -> usize {
        self.table.n()
    }

    pub fn omega(&self) -> usize {
        self.table.alphabet().len()
    }

    pub fn value(&self, scenario: usize, observed: &[Observation]) -> Ratio<u64> {
        self.coverage.value(&self.table, scenario, observed)
    }

    pub fn is_covered(&self, scenario: usize, observed: &[Observation]) -> bool {
        self.value(scenario, observed).is_one()
    }

    /// True for elimination coverage with quota `m - 1`.
    pub fn is_odtn(&self) -> bool {
        self.coverage.elimination_quota() == Some(self.m().saturating_sub(1))
    }

    /// Same coverage over a different table with identical shape.
    pub fn with_table(&self, table: OdtnInstance) -> Result<Self> {
        if table.m() != self.m() || table.n() != self.n() {
            return Err(Error::Domain("replacement table has a different shape".into()));
        }
        Ok(AsrnInstance { table, coverage: self.coverage.clone(), separability: self.separability })
    }

    /// Checks that every scenario is covered by the full observation vector
    /// for every star resolution. Returns the first failing scenario.
    pub fn check_feasibility(&self, cap: u32) -> Result<Option<usize>> {
        for i in 0..self.m() {
            let stars = self.table.column_stars(i);
            if stars > cap {
                return Err(Error::infeasible(format!("feasibility check for scenario {i}"), stars, cap));
            }
            let mut feasible = true;
            for_each_resolution(&self.table, i, &(0..self.n()).collect::<Vec<_>>(), |obs| {
                if feasible && !self.is_covered(i, obs) {
                    feasible = false;
                }
            });
            if !feasible {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

/// Calls `visit` with the observations of `elements` (in order) under every
/// resolution of the stars of `scenario` on those elements.
pub fn for_each_resolution<F: FnMut(&[Observation])>(
    table: &OdtnInstance,
    scenario: usize,
    elements: &[usize],
    mut visit: F,
) {
    let omega = table.alphabet().len();
    let mut obs: Vec<Observation> = elements
        .iter()
        .map(|&e| match table.response(e, scenario) {
            Response::Det(o) => (e, o),
            Response::Star => (e, 0),
        })
        .collect();
    let stars: Vec<usize> = elements
        .iter()
        .enumerate()
        .filter(|(_, &e)| table.response(e, scenario).is_star())
        .map(|(k, _)| k)
        .collect();
    loop {
        visit(&obs);
        // odometer increment over star positions
        let mut carry = true;
        for &k in &stars {
            obs[k].1 += 1;
            if obs[k].1 < omega {
                carry = false;
                break;
            }
            obs[k].1 = 0;
        }
        if carry {
            break;
        }
    }
}

/// Minimum positive marginal increment over all subsets of consistent
/// observations, for every scenario and resolution.
pub fn measure_separability(table: &OdtnInstance, coverage: &dyn CoverageFunction, cap: u32) -> Result<Option<Ratio<u64>>> {
    let n = table.n();
    if n as u32 > cap {
        return Err(Error::infeasible("separability enumeration", n, cap));
    }
    let all: Vec<usize> = (0..n).collect();
    let mut best: Option<Ratio<u64>> = None;
    for i in 0..table.m() {
        if table.column_stars(i) > cap {
            return Err(Error::infeasible("separability enumeration", table.column_stars(i), cap));
        }
        for_each_resolution(table, i, &all, |full| {
            for mask in 0u64..(1u64 << n) {
                let subset: Vec<Observation> = (0..n).filter(|e| mask >> e & 1 == 1).map(|e| full[e]).collect();
                let base = coverage.value(table, i, &subset);
                for e in (0..n).filter(|e| mask >> e & 1 == 0) {
                    let mut bigger = subset.clone();
                    bigger.push(full[e]);
                    let gain = coverage.value(table, i, &bigger) - base;
                    if !gain.is_zero() && best.is_none_or(|b| gain < b) {
                        best = Some(gain);
                    }
                }
            }
        });
    }
    Ok(best)
}
