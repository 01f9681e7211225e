//! Adaptive greedy policies.
//!
//! Both scores add a pruning term to the expected normalized coverage gain
//! of the pending scenarios:
//!
//! * `Score_c` prunes by expanded-scenario counts: the mass outside the
//!   outcome branch holding the most expanded scenarios.
//! * `Score_r` prunes by original scenarios: the mass that would disagree
//!   with the outcome shared by the most pending scenarios.
//!
//! The gain term never enumerates expanded scenarios. A deterministic
//! response contributes its one outcome; a `*` response averages the
//! coverage after each outcome, weighted by the current mass `p_i`.

use num_rational::Ratio;
use rayon::prelude::*;

use crate::coverage::AsrnInstance;
use crate::error::{Error, Result};
use crate::model::{OdtnInstance, Response};
use crate::scalar::{self, Scalar};
use crate::state::BeliefState;
use crate::stop::StopRule;
use crate::transcript::{ask, OutcomeOracle, Phase, Step, Transcript, Verdict};

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreBreakdown<S> {
    pub first_term: S,
    pub second_term: S,
    pub total: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    ScoreC,
    ScoreR,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::ScoreC => "adaptive-c",
            Variant::ScoreR => "adaptive-r",
        }
    }
}

/// `ScoreR` iff `c · log2|Ω| > r`.
pub fn choose_variant(table: &OdtnInstance) -> Result<Variant> {
    let stats = table.uncertainty_stats()?;
    Ok(select_variant(stats.column, stats.row, table.alphabet().len()))
}

pub fn select_variant(column: u32, row: usize, omega: usize) -> Variant {
    if f64::from(column) * (omega as f64).log2() > row as f64 {
        Variant::ScoreR
    } else {
        Variant::ScoreC
    }
}

fn to_scalar<S: Scalar>(r: Ratio<u64>) -> S {
    S::from_ratio(*r.numer(), *r.denom())
}

fn check_unselected<S: Scalar>(state: &BeliefState<'_, S>, element: usize) -> Result<()> {
    if element >= state.instance().n() {
        return Err(Error::Domain(format!("element {element} out of range")));
    }
    if state.is_selected(element) {
        return Err(Error::AlreadySelected(element));
    }
    Ok(())
}

/// Expected normalized coverage gain of `element`, summed over pending
/// scenarios with weights `p_i`.
pub fn second_term<S: Scalar>(state: &BeliefState<'_, S>, element: usize) -> Result<S> {
    check_unselected(state, element)?;
    let inst = state.instance();
    let omega = inst.omega();
    let row = inst.table().row(element);
    let mut total = S::zero();
    for i in state.pending() {
        let now: S = to_scalar(state.coverage_now(i));
        let after: S = match row[i] {
            Response::Det(o) => to_scalar(state.coverage_after(i, element, o)),
            Response::Star => {
                let sum = scalar::sum((0..omega).map(|o| to_scalar::<S>(state.coverage_after(i, element, o))));
                sum / S::from_usize(omega)
            }
        };
        let gain = (after - now.clone()) / (S::one() - now);
        total = total + state.mass(i).clone() * gain;
    }
    Ok(total)
}

/// Identification-specific form of [`second_term`]: the expected number of
/// newly ruled-out hypotheses over `|A| - 1`.
pub fn second_term_closed_form<S: Scalar>(state: &BeliefState<'_, S>, element: usize) -> Result<S> {
    check_unselected(state, element)?;
    let inst = state.instance();
    if !inst.is_odtn() {
        return Err(Error::Domain("closed-form score needs elimination coverage with quota m - 1".into()));
    }
    let alive = state.alive_count();
    if alive <= 1 {
        return Err(Error::TerminalState);
    }
    let omega = inst.omega();
    let denom = S::from_usize(alive - 1);
    let eliminated: Vec<S> = (0..omega).map(|o| S::from_usize(state.newly_eliminated(element, o)) / denom.clone()).collect();
    let star_gain = scalar::sum(eliminated.iter().cloned()) / S::from_usize(omega);
    let row = inst.table().row(element);
    let mut total = S::zero();
    for i in (0..inst.m()).filter(|&i| state.is_alive(i)) {
        let gain = match row[i] {
            Response::Det(o) => eliminated[o].clone(),
            Response::Star => star_gain.clone(),
        };
        total = total + state.mass(i).clone() * gain;
    }
    Ok(total)
}

fn gain_term<S: Scalar>(state: &BeliefState<'_, S>, element: usize) -> Result<S> {
    if state.instance().is_odtn() {
        second_term_closed_form(state, element)
    } else {
        second_term(state, element)
    }
}

/// Pending mass outside the branch with the most expanded scenarios, plus
/// the gain term.
pub fn score_c<S: Scalar>(state: &BeliefState<'_, S>, element: usize) -> Result<ScoreBreakdown<S>> {
    let second = gain_term(state, element)?;
    let stats = state.branch_stats(element);
    let b = stats.largest_count();
    let first = stats.total_mass() - stats.mass[b].clone();
    Ok(ScoreBreakdown { total: first.clone() + second.clone(), first_term: first, second_term: second })
}

/// Mass of pending expanded scenarios whose outcome differs from the one
/// shared by the most pending scenarios, plus the gain term.
pub fn score_r<S: Scalar>(state: &BeliefState<'_, S>, element: usize) -> Result<ScoreBreakdown<S>> {
    let second = gain_term(state, element)?;
    let inst = state.instance();
    let omega = inst.omega();
    let row = inst.table().row(element);
    let mut sizes = vec![0usize; omega];
    for i in state.pending() {
        if let Response::Det(o) = row[i] {
            sizes[o] += 1;
        }
    }
    let mut majority = 0;
    for o in 1..omega {
        if sizes[o] > sizes[majority] {
            majority = o;
        }
    }
    let mut disagree = S::zero();
    let mut starred = S::zero();
    for i in state.pending() {
        match row[i] {
            Response::Det(o) if o != majority => disagree = disagree + state.mass(i).clone(),
            Response::Det(_) => {}
            Response::Star => starred = starred + state.mass(i).clone(),
        }
    }
    let first = disagree + starred * S::from_ratio(omega as u64 - 1, omega as u64);
    Ok(ScoreBreakdown { total: first.clone() + second.clone(), first_term: first, second_term: second })
}

pub fn score<S: Scalar>(variant: Variant, state: &BeliefState<'_, S>, element: usize) -> Result<ScoreBreakdown<S>> {
    match variant {
        Variant::ScoreC => score_c(state, element),
        Variant::ScoreR => score_r(state, element),
    }
}

/// A deterministic decision procedure over belief states.
pub trait Policy<S: Scalar>: Sync {
    fn name(&self) -> String;

    /// Next element to select, or `None` when the policy stops.
    fn next(&self, state: &BeliefState<'_, S>) -> Result<Option<usize>>;

    /// [`next`](Self::next) together with the phase that chose it.
    fn next_step(&self, state: &BeliefState<'_, S>) -> Result<Option<(usize, Phase)>> {
        Ok(self.next(state)?.map(|e| (e, Phase::Greedy)))
    }

    /// Verdict once the policy has stopped at `state`.
    fn verdict(&self, state: &BeliefState<'_, S>) -> Verdict {
        match state.compatible_set().as_slice() {
            [only] => Verdict::Identified(*only),
            _ => Verdict::AllCovered,
        }
    }
}

/// Greedy policy maximizing `Score_c` or `Score_r` (ties: lowest index).
#[derive(Clone, Debug)]
pub struct AdaptivePolicy {
    pub variant: Variant,
    pub stop: StopRule,
}

impl AdaptivePolicy {
    pub fn new(variant: Variant) -> Self {
        AdaptivePolicy { variant, stop: StopRule::AllCovered }
    }

    pub fn with_stop(variant: Variant, stop: StopRule) -> Self {
        AdaptivePolicy { variant, stop }
    }

    /// Scores of every unselected element, in index order.
    pub fn scores<S: Scalar>(&self, state: &BeliefState<'_, S>) -> Result<Vec<(usize, S)>> {
        let candidates: Vec<usize> = state.unselected().collect();
        let eval = |&e: &usize| score(self.variant, state, e).map(|s| (e, s.total));
        if candidates.len() * state.instance().m() >= 4096 {
            candidates.par_iter().map(eval).collect()
        } else {
            candidates.iter().map(eval).collect()
        }
    }
}

impl<S: Scalar> Policy<S> for AdaptivePolicy {
    fn name(&self) -> String {
        self.variant.name().to_string()
    }

    fn next(&self, state: &BeliefState<'_, S>) -> Result<Option<usize>> {
        if state.alive_count() == 0 {
            return Err(Error::Inconsistent);
        }
        if self.stop.is_satisfied(state) {
            return Ok(None);
        }
        let scores = self.scores(state)?;
        match scalar::argmax_first(&scores) {
            Some((e, _)) => Ok(Some(e)),
            None => Err(Error::Domain("every element is selected but the stop rule is not met".into())),
        }
    }
}

/// Runs `policy` against `oracle` until it stops.
pub fn run_policy<S: Scalar>(inst: &AsrnInstance, policy: &dyn Policy<S>, oracle: &mut dyn OutcomeOracle) -> Result<Transcript> {
    let mut state = BeliefState::<S>::new(inst);
    let mut transcript = Transcript::new(policy.name());
    while let Some((e, phase)) = policy.next_step(&state)? {
        let o = ask(oracle, e, inst.omega())?;
        state.apply(e, o)?;
        if state.alive_count() == 0 {
            return Err(Error::Inconsistent);
        }
        transcript.steps.push(Step { element: e, outcome: o, phase });
    }
    transcript.verdict = policy.verdict(&state);
    Ok(transcript)
}

pub fn run_adaptive<S: Scalar>(inst: &AsrnInstance, policy: &AdaptivePolicy, oracle: &mut dyn OutcomeOracle) -> Result<Transcript> {
    run_policy::<S>(inst, policy, oracle)
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;

    fn q(n: u64, d: u64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn odtn(rows: &[&str]) -> AsrnInstance {
        AsrnInstance::odtn(&OdtnInstance::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn score_c_example() {
        let inst = odtn(&["+-*"]);
        let state = BeliefState::<BigRational>::new(&inst);
        let s = score_c(&state, 0).unwrap();
        assert_eq!(s.first_term, q(1, 2));
        assert_eq!(s.second_term, q(1, 2));
        assert_eq!(s.total, q(1, 1));
        assert_eq!(second_term(&state, 0).unwrap(), q(1, 2));
    }

    #[test]
    fn unanimous_test_has_no_pruning() {
        let inst = odtn(&["+++", "+-*"]);
        let state = BeliefState::<BigRational>::new(&inst);
        assert_eq!(score_c(&state, 0).unwrap().first_term, q(0, 1));
        assert_eq!(score_r(&state, 0).unwrap().first_term, q(0, 1));
    }

    #[test]
    fn score_r_examples() {
        let inst = odtn(&["++-"]);
        let state = BeliefState::<BigRational>::new(&inst);
        assert_eq!(score_r(&state, 0).unwrap().first_term, q(1, 3));
        // every pending scenario starred
        let inst = odtn(&["***", "+-+", "++-"]);
        let state = BeliefState::<BigRational>::new(&inst);
        assert_eq!(score_r(&state, 0).unwrap().first_term, q(1, 2));
    }

    #[test]
    fn closed_form_needs_two_alive() {
        let inst = odtn(&["+-", "++"]);
        let state = BeliefState::<BigRational>::new(&inst).observe(0, 0).unwrap();
        assert!(matches!(second_term_closed_form(&state, 1), Err(Error::TerminalState)));
        assert!(matches!(score_c(&state, 0), Err(Error::AlreadySelected(0))));
    }

    #[test]
    fn variant_rule() {
        assert_eq!(select_variant(0, 0, 2), Variant::ScoreC);
        assert_eq!(select_variant(10, 3, 2), Variant::ScoreR);
        assert_eq!(select_variant(2, 5, 2), Variant::ScoreC);
    }

    fn truth_oracle(table: &OdtnInstance, truth: usize) -> impl FnMut(usize) -> Result<usize> + '_ {
        move |e| match table.response(e, truth) {
            Response::Det(o) => Ok(o),
            Response::Star => Ok(0),
        }
    }

    #[test]
    fn single_separating_test() {
        let table = OdtnInstance::from_rows(&["+-"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        for variant in [Variant::ScoreC, Variant::ScoreR] {
            for truth in 0..2 {
                let t = run_adaptive::<BigRational>(&inst, &AdaptivePolicy::new(variant), &mut truth_oracle(&table, truth)).unwrap();
                assert_eq!(t.test_count(), 1);
                assert_eq!(t.verdict, Verdict::Identified(truth));
                t.verify(&inst).unwrap();
            }
        }
    }

    #[test]
    fn balanced_binary_split_takes_two_tests() {
        let table = OdtnInstance::from_rows(&["++--", "+-+-", "+++-"]).unwrap();
        let inst = AsrnInstance::odtn(&table).unwrap();
        for truth in 0..4 {
            let t = run_adaptive::<BigRational>(&inst, &AdaptivePolicy::new(Variant::ScoreC), &mut truth_oracle(&table, truth)).unwrap();
            assert_eq!(t.test_count(), 2, "truth {truth}");
            assert_eq!(t.verdict, Verdict::Identified(truth));
        }
    }

    #[test]
    fn oracle_outside_alphabet_is_rejected() {
        let inst = odtn(&["+-"]);
        let mut bad = |_e: usize| -> Result<usize> { Ok(5) };
        let err = run_adaptive::<f64>(&inst, &AdaptivePolicy::new(Variant::ScoreC), &mut bad).unwrap_err();
        assert!(matches!(err, Error::UnknownOutcome(_)));
    }
}
