//! Compact belief state over expanded scenarios.
//!
//! An expanded scenario `(i, ω)` is a hypothesis together with a resolution
//! of all its `*` entries. Instead of tracking those `|Ω|^{c_i}` copies, the
//! state keeps for every scenario an alive flag and the number `k_i` of
//! selected elements on which it has a `*`. Then
//!
//! * `n_i = |Ω|^{c_i - k_i}` copies survive (0 when dead), and
//! * their total mass is `p_i = π_i · |Ω|^{-k_i}`.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::coverage::AsrnInstance;
use crate::error::{Error, Result};
use crate::model::{Observation, Response};
use crate::scalar::{self, Scalar};

#[derive(Clone, Debug)]
pub struct BeliefState<'a, S: Scalar> {
    inst: &'a AsrnInstance,
    selected: Vec<Observation>,
    is_selected: Vec<bool>,
    alive: Vec<bool>,
    star_hits: Vec<u32>,
    covered: Vec<bool>,
    mass: Vec<S>,
    alive_count: usize,
}

/// Per-outcome split of the pending expanded scenarios for one element.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchStats<S> {
    /// Probability mass routed to each outcome.
    pub mass: Vec<S>,
    /// Number of expanded scenarios routed to each outcome.
    pub count: Vec<BigUint>,
}

impl<S: Scalar> BranchStats<S> {
    /// Outcome with the most expanded scenarios; ties go to the earliest
    /// outcome.
    pub fn largest_count(&self) -> usize {
        let mut best = 0;
        for (o, c) in self.count.iter().enumerate() {
            if *c > self.count[best] {
                best = o;
            }
        }
        best
    }

    pub fn total_mass(&self) -> S {
        scalar::sum(self.mass.iter().cloned())
    }
}

impl<'a, S: Scalar> BeliefState<'a, S> {
    pub fn new(inst: &'a AsrnInstance) -> Self {
        let m = inst.m();
        let mass = inst.table().prior().iter().map(S::from_rational).collect();
        let mut state = BeliefState {
            inst,
            selected: Vec::new(),
            is_selected: vec![false; inst.n()],
            alive: vec![true; m],
            star_hits: vec![0; m],
            covered: vec![false; m],
            mass,
            alive_count: m,
        };
        state.refresh_coverage();
        state
    }

    pub fn instance(&self) -> &'a AsrnInstance {
        self.inst
    }

    pub fn selected(&self) -> &[Observation] {
        &self.selected
    }

    pub fn is_selected(&self, element: usize) -> bool {
        self.is_selected[element]
    }

    pub fn unselected(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.inst.n()).filter(move |&e| !self.is_selected[e])
    }

    pub fn is_alive(&self, scenario: usize) -> bool {
        self.alive[scenario]
    }

    pub fn is_covered(&self, scenario: usize) -> bool {
        self.covered[scenario]
    }

    /// Alive and not yet covered: the scenario still has expanded copies in
    /// the pending set.
    pub fn is_pending(&self, scenario: usize) -> bool {
        self.alive[scenario] && !self.covered[scenario]
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    /// `k_i`.
    pub fn star_hits(&self, scenario: usize) -> u32 {
        self.star_hits[scenario]
    }

    /// `p_i`.
    pub fn mass(&self, scenario: usize) -> &S {
        &self.mass[scenario]
    }

    pub fn masses(&self) -> &[S] {
        &self.mass
    }

    /// `c_i - k_i` for alive scenarios.
    pub fn surviving_exponent(&self, scenario: usize) -> Option<u32> {
        self.alive[scenario].then(|| self.inst.table().column_stars(scenario) - self.star_hits[scenario])
    }

    /// `n_i`, the number of consistent expanded scenarios of `scenario`.
    pub fn surviving_count(&self, scenario: usize) -> BigUint {
        match self.surviving_exponent(scenario) {
            Some(exp) => num_traits::pow(BigUint::from(self.inst.omega()), exp as usize),
            None => BigUint::zero(),
        }
    }

    /// `A`, the scenarios compatible with every observation.
    pub fn compatible_set(&self) -> Vec<usize> {
        (0..self.inst.m()).filter(|&i| self.alive[i]).collect()
    }

    pub fn pending(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.inst.m()).filter(move |&i| self.is_pending(i))
    }

    pub fn pending_mass(&self) -> S {
        scalar::sum(self.pending().map(|i| self.mass[i].clone()))
    }

    pub fn alive_mass(&self) -> S {
        scalar::sum((0..self.inst.m()).filter(|&i| self.alive[i]).map(|i| self.mass[i].clone()))
    }

    /// True when no pending expanded scenario is left.
    pub fn all_covered(&self) -> bool {
        self.pending().next().is_none()
    }

    /// `p_i / Σ_j p_j`.
    pub fn posterior(&self) -> Result<Vec<S>> {
        let total = self.alive_mass();
        if self.alive_count == 0 || total.is_zero() {
            return Err(Error::Inconsistent);
        }
        Ok(self.mass.iter().map(|p| p.clone() / total.clone()).collect())
    }

    /// Current `f_i` of an alive scenario under the observed outcomes.
    pub fn coverage_now(&self, scenario: usize) -> Ratio<u64> {
        match self.inst.coverage().elimination_quota() {
            Some(q) if self.alive[scenario] => {
                Ratio::new(((self.inst.m() - self.alive_count).min(q)) as u64, q as u64)
            }
            _ => self.inst.value(scenario, &self.selected),
        }
    }

    /// `f_i` of an alive scenario after additionally observing `outcome` on
    /// `element`; `outcome` must be consistent with the scenario.
    pub fn coverage_after(&self, scenario: usize, element: usize, outcome: usize) -> Ratio<u64> {
        match self.inst.coverage().elimination_quota() {
            Some(q) if self.alive[scenario] => {
                let eliminated = self.inst.m() - self.alive_count + self.newly_eliminated(element, outcome);
                Ratio::new(eliminated.min(q) as u64, q as u64)
            }
            _ => {
                let mut obs = self.selected.clone();
                obs.push((element, outcome));
                self.inst.value(scenario, &obs)
            }
        }
    }

    /// Alive scenarios that observing `outcome` on `element` would rule out.
    pub fn newly_eliminated(&self, element: usize, outcome: usize) -> usize {
        let row = self.inst.table().row(element);
        (0..self.inst.m()).filter(|&j| self.alive[j] && row[j].contradicts(outcome)).count()
    }

    pub fn branch_stats(&self, element: usize) -> BranchStats<S> {
        let omega = self.inst.omega();
        let omega_s = S::from_usize(omega);
        let mut mass = vec![S::zero(); omega];
        let mut count = vec![BigUint::zero(); omega];
        let mut star_mass = S::zero();
        let mut star_count = BigUint::zero();
        let row = self.inst.table().row(element);
        for i in self.pending() {
            match row[i] {
                Response::Det(o) => {
                    mass[o] = mass[o].clone() + self.mass[i].clone();
                    count[o] += self.surviving_count(i);
                }
                Response::Star => {
                    star_mass = star_mass + self.mass[i].clone();
                    // element unselected and starred, so c_i - k_i >= 1
                    let exp = self.surviving_exponent(i).expect("pending scenarios are alive");
                    star_count += num_traits::pow(BigUint::from(omega), exp as usize - 1);
                }
            }
        }
        let star_share = star_mass / omega_s;
        for o in 0..omega {
            mass[o] = mass[o].clone() + star_share.clone();
            count[o] += &star_count;
        }
        BranchStats { mass, count }
    }

    pub fn apply(&mut self, element: usize, outcome: usize) -> Result<()> {
        if element >= self.inst.n() {
            return Err(Error::Domain(format!("element {element} out of range")));
        }
        if self.is_selected[element] {
            return Err(Error::AlreadySelected(element));
        }
        if outcome >= self.inst.omega() {
            return Err(Error::UnknownOutcome(format!("#{outcome}")));
        }
        let omega = S::from_usize(self.inst.omega());
        let row = self.inst.table().row(element);
        for i in 0..self.inst.m() {
            if !self.alive[i] {
                continue;
            }
            match row[i] {
                Response::Det(o) if o != outcome => {
                    self.alive[i] = false;
                    self.alive_count -= 1;
                    self.mass[i] = S::zero();
                }
                Response::Det(_) => {}
                Response::Star => {
                    self.star_hits[i] += 1;
                    self.mass[i] = self.mass[i].clone() / omega.clone();
                }
            }
        }
        self.selected.push((element, outcome));
        self.is_selected[element] = true;
        self.refresh_coverage();
        Ok(())
    }

    /// Functional form of [`apply`](Self::apply).
    pub fn observe(&self, element: usize, outcome: usize) -> Result<Self> {
        let mut next = self.clone();
        next.apply(element, outcome)?;
        Ok(next)
    }

    /// Replays a sequence of observations from the initial state.
    pub fn replay(inst: &'a AsrnInstance, steps: &[Observation]) -> Result<Self> {
        let mut state = BeliefState::new(inst);
        for &(e, o) in steps {
            state.apply(e, o)?;
        }
        Ok(state)
    }

    fn refresh_coverage(&mut self) {
        for i in 0..self.inst.m() {
            self.covered[i] = self.alive[i] && self.coverage_now(i).is_one();
        }
    }
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::model::OdtnInstance;

    fn q(n: u64, d: u64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn fresh_state() {
        let table = OdtnInstance::from_rows(&["+-"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        let state = BeliefState::<BigRational>::new(&inst);
        assert_eq!(state.masses(), &[q(1, 2), q(1, 2)]);
        assert_eq!(state.alive_mass(), q(1, 1));
        assert!((0..2).all(|i| !state.is_covered(i)));
        assert_eq!(state.compatible_set(), vec![0, 1]);
    }

    #[test]
    fn contradiction_kills() {
        let table = OdtnInstance::from_rows(&["+-"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        let state = BeliefState::<BigRational>::new(&inst).observe(0, 0).unwrap();
        assert_eq!((state.is_alive(0), state.is_alive(1)), (true, false));
        assert!(state.is_covered(0));
        assert!(state.all_covered());
    }

    #[test]
    fn star_halves_count_and_mass() {
        // hypothesis 0 has three stars: n_0 = 8; after one star test n_0 = 4
        let table = OdtnInstance::from_rows(&["*+", "*-", "*+"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        let mut state = BeliefState::<BigRational>::new(&inst);
        assert_eq!(state.surviving_count(0), BigUint::from(8u32));
        state.apply(0, 1).unwrap();
        assert_eq!(state.surviving_count(0), BigUint::from(4u32));
        assert_eq!(state.mass(0), &q(1, 4));
        // deterministic match leaves n_1 unchanged
        let table = OdtnInstance::from_rows(&["+*", "**"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        let mut state = BeliefState::<BigRational>::new(&inst);
        let before = state.surviving_count(0);
        state.apply(0, 0).unwrap();
        assert_eq!(state.surviving_count(0), before);
    }

    #[test]
    fn branch_masses_split_stars_evenly() {
        let table = OdtnInstance::from_rows(&["+-*"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        let state = BeliefState::<BigRational>::new(&inst);
        let stats = state.branch_stats(0);
        assert_eq!(stats.mass, vec![q(1, 2), q(1, 2)]);
        assert_eq!(stats.count, vec![BigUint::from(2u32), BigUint::from(2u32)]);
        assert_eq!(stats.largest_count(), 0);

        let table = OdtnInstance::from_rows(&["+++"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        let stats = BeliefState::<BigRational>::new(&inst).branch_stats(0);
        assert_eq!(stats.mass, vec![q(1, 1), q(0, 1)]);

        let table = OdtnInstance::from_rows(&["*"]).unwrap();
        let inst = AsrnInstance::new(table.clone(), std::sync::Arc::new(crate::coverage::WeightedCoverage::new(vec![1], vec![vec![0]], vec![vec![vec![0], vec![0]]]).unwrap()), Ratio::new(1, 1)).unwrap();
        let stats = BeliefState::<BigRational>::new(&inst).branch_stats(0);
        assert_eq!(stats.count[0], stats.count[1]);
    }

    #[test]
    fn posterior_follows_bayes() {
        // k = (0, 1): p = (1/2, 1/4) -> posterior (2/3, 1/3)
        let table = OdtnInstance::from_rows(&["+*", "+-"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        let state = BeliefState::<BigRational>::new(&inst).observe(0, 0).unwrap();
        assert_eq!(state.posterior().unwrap(), vec![q(2, 3), q(1, 3)]);
    }

    #[test]
    fn errors() {
        let table = OdtnInstance::from_rows(&["+-", "++"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        let mut state = BeliefState::<f64>::new(&inst);
        state.apply(1, 1).unwrap();
        assert!(matches!(state.posterior(), Err(Error::Inconsistent)));
        assert!(matches!(state.apply(1, 0), Err(Error::AlreadySelected(1))));
        assert!(matches!(state.apply(0, 7), Err(Error::UnknownOutcome(_))));
    }
}
