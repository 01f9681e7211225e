//! Identification for instances where most entries are `*`.
//!
//! The main loop greedily picks the test with the most deterministic
//! hypotheses among the candidates `A` and, after 1, 2, 4, ... greedy steps,
//! asks a membership check whether the truth is among the
//! `⌈2 m^α⌉` candidates that were starred least often.
//!
//! The membership check narrows the candidate set to a suspect `z` with
//! separating tests, then confirms `z` with up to `⌈4 log₂ m⌉` tests that
//! are deterministic for it, and finally duels `z` against every hypothesis
//! that was rarely starred on those tests.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::model::{OdtnInstance, Response};
use crate::transcript::{ask, OutcomeOracle, Phase, Step, Transcript, Verdict};

/// Mutable bookkeeping of one run.
#[derive(Clone, Debug)]
pub struct SparseRunState<'a> {
    table: &'a OdtnInstance,
    /// `A`: hypotheses not ruled out by greedy-step tests.
    pub alive: Vec<bool>,
    /// `w_i`: greedy-step tests with a `*` for `i`.
    pub weights: Vec<u32>,
    /// Greedy steps taken so far.
    pub t: usize,
    /// Greedy steps that reused an outcome already observed by a
    /// membership check.
    pub reused: usize,
    pub transcript: Transcript,
    known: Vec<Option<usize>>,
    greedy_used: Vec<bool>,
    compatible: Vec<bool>,
}

impl<'a> SparseRunState<'a> {
    pub fn new(table: &'a OdtnInstance) -> Self {
        let (m, n) = (table.m(), table.n());
        SparseRunState {
            table,
            alive: vec![true; m],
            weights: vec![0; m],
            t: 0,
            reused: 0,
            transcript: Transcript::new("sparse"),
            known: vec![None; n],
            greedy_used: vec![false; n],
            compatible: vec![true; m],
        }
    }

    pub fn alive_set(&self) -> Vec<usize> {
        (0..self.table.m()).filter(|&i| self.alive[i]).collect()
    }

    /// Outcome of `test` if it was already observed.
    pub fn known(&self, test: usize) -> Option<usize> {
        self.known[test]
    }

    /// Compatible with every observation of the run so far.
    pub fn is_compatible(&self, i: usize) -> bool {
        self.compatible[i]
    }

    fn query(&mut self, test: usize, phase: Phase, oracle: &mut dyn OutcomeOracle) -> Result<usize> {
        debug_assert!(self.known[test].is_none());
        let o = ask(oracle, test, self.table.alphabet().len())?;
        self.known[test] = Some(o);
        for (i, c) in self.compatible.iter_mut().enumerate() {
            if self.table.response(test, i).contradicts(o) {
                *c = false;
            }
        }
        self.transcript.steps.push(Step { element: test, outcome: o, phase });
        Ok(o)
    }

    fn unused(&self, test: usize) -> bool {
        self.known[test].is_none()
    }
}

/// `((|Ω| - 1)/|Ω|) · |A ∩ det(T)|`; for `±` tests this is
/// `(|T⁺ ∩ A| + |T⁻ ∩ A|)/2`.
pub fn split_score(table: &OdtnInstance, alive: &[bool], test: usize) -> Ratio<u64> {
    let omega = table.alphabet().len() as u64;
    let det = (0..table.m()).filter(|&i| alive[i] && !table.response(test, i).is_star()).count() as u64;
    Ratio::new(det * (omega - 1), omega)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemberOutcome {
    Identified(usize),
    NotInZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemberVerdict {
    pub outcome: MemberOutcome,
    pub tests_used: usize,
}

/// `⌈4 log₂ m⌉`.
pub fn confirmation_budget(m: usize) -> usize {
    (4.0 * (m as f64).log2()).ceil() as usize
}

/// `2 log₂ m`.
pub fn duel_threshold(m: usize) -> f64 {
    2.0 * (m as f64).log2()
}

fn has_two_outcomes(table: &OdtnInstance, test: usize, set: &[usize]) -> bool {
    let mut seen = None;
    set.iter().any(|&i| match table.response(test, i) {
        Response::Det(o) => *seen.get_or_insert(o) != o,
        Response::Star => false,
    })
}

/// Membership check: is the truth in `z_set`? Only tests not yet observed
/// in the run are performed; earlier observations still prune candidates.
pub fn member(z_set: &[usize], oracle: &mut dyn OutcomeOracle, run: &mut SparseRunState<'_>) -> Result<MemberVerdict> {
    let table = run.table;
    let (m, n) = (table.m(), table.n());
    let start = run.transcript.steps.len();
    let verdict = |run: &SparseRunState<'_>, outcome| MemberVerdict { outcome, tests_used: run.transcript.steps.len() - start };

    let mut suspects: Vec<usize> = z_set.iter().copied().filter(|&i| run.is_compatible(i)).collect();
    while suspects.len() >= 2 {
        let Some(test) = (0..n).find(|&t| run.unused(t) && has_two_outcomes(table, t, &suspects)) else {
            return Err(Error::NotIdentifiable(suspects[0], suspects[1]));
        };
        run.query(test, Phase::Member, oracle)?;
        suspects.retain(|&i| run.is_compatible(i));
    }
    let Some(&z) = suspects.first() else {
        return Ok(verdict(run, MemberOutcome::NotInZ));
    };

    let others = |run: &SparseRunState<'_>| (0..m).filter(|&j| j != z && run.is_compatible(j)).count();
    let budget = confirmation_budget(m);
    let mut confirming = Vec::new();
    while others(run) > 0 && confirming.len() < budget {
        let Some(test) = (0..n).find(|&t| run.unused(t) && !table.response(t, z).is_star()) else {
            break;
        };
        let o = run.query(test, Phase::Member, oracle)?;
        if table.response(test, z).contradicts(o) {
            return Ok(verdict(run, MemberOutcome::NotInZ));
        }
        confirming.push(test);
    }
    if others(run) == 0 {
        return Ok(verdict(run, MemberOutcome::Identified(z)));
    }

    let threshold = duel_threshold(m);
    let rivals: Vec<usize> = (0..m)
        .filter(|&j| j != z && run.is_compatible(j))
        .filter(|&j| (confirming.iter().filter(|&&t| table.response(t, j).is_star()).count() as f64) <= threshold)
        .collect();
    for j in rivals {
        if !run.is_compatible(j) {
            continue;
        }
        let duel = (0..n).find(|&t| {
            run.unused(t)
                && matches!((table.response(t, z), table.response(t, j)), (Response::Det(a), Response::Det(b)) if a != b)
        });
        let Some(test) = duel else { continue };
        let o = run.query(test, Phase::Member, oracle)?;
        if table.response(test, z).contradicts(o) {
            return Ok(verdict(run, MemberOutcome::NotInZ));
        }
    }
    Ok(verdict(run, MemberOutcome::Identified(z)))
}

/// `min(|A|, ⌈2 m^α⌉)` alive hypotheses with the lowest weights, ties by
/// index.
pub fn member_candidates(run: &SparseRunState<'_>, alpha: f64) -> Vec<usize> {
    let m = run.table.m();
    let size = (2.0 * (m as f64).powf(alpha)).ceil() as usize;
    let mut alive = run.alive_set();
    alive.sort_by_key(|&i| (run.weights[i], i));
    alive.truncate(size.min(alive.len()));
    alive
}

#[derive(Clone, Debug)]
pub struct SparseRun {
    pub transcript: Transcript,
    /// Greedy steps, including those that reused a known outcome.
    pub greedy_steps: usize,
    pub member_calls: usize,
    /// Whether a membership check ended the run while `|A| > 1`.
    pub stopped_by_member: bool,
    pub weights: Vec<u32>,
    /// Greedy-step tests in order.
    pub greedy_tests: Vec<usize>,
}

pub fn run_sparse(table: &OdtnInstance, oracle: &mut dyn OutcomeOracle) -> Result<SparseRun> {
    if let Some((i, j)) = table.identifiability_witness() {
        return Err(Error::NotIdentifiable(i, j));
    }
    let alpha = table.uncertainty_stats()?.alpha;
    let mut run = SparseRunState::new(table);
    let mut member_calls = 0;
    let mut greedy_tests = Vec::new();
    let mut stopped_by_member = false;
    loop {
        let alive = run.alive_set();
        if alive.len() <= 1 {
            run.transcript.verdict = match alive.as_slice() {
                [only] => Verdict::Identified(*only),
                _ => return Err(Error::Inconsistent),
            };
            break;
        }
        if run.t.is_power_of_two() {
            let z = member_candidates(&run, alpha);
            member_calls += 1;
            if let MemberOutcome::Identified(i) = member(&z, oracle, &mut run)?.outcome {
                run.transcript.verdict = Verdict::Identified(i);
                stopped_by_member = true;
                break;
            }
        }
        let mut best: Option<(usize, Ratio<u64>)> = None;
        for t in (0..table.n()).filter(|&t| !run.greedy_used[t]) {
            let s = split_score(table, &run.alive, t);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((t, s));
            }
        }
        let test = match best {
            Some((t, s)) if s > Ratio::from_integer(0) => t,
            _ => return Err(Error::NotIdentifiable(alive[0], alive[1])),
        };
        let o = match run.known(test) {
            Some(o) => {
                run.reused += 1;
                o
            }
            None => run.query(test, Phase::Greedy, oracle)?,
        };
        run.greedy_used[test] = true;
        greedy_tests.push(test);
        for i in 0..table.m() {
            match table.response(test, i) {
                Response::Star => run.weights[i] += 1,
                Response::Det(d) if d != o => run.alive[i] = false,
                Response::Det(_) => {}
            }
        }
        run.t += 1;
    }
    Ok(SparseRun {
        greedy_steps: run.t,
        member_calls,
        stopped_by_member,
        weights: run.weights,
        greedy_tests,
        transcript: run.transcript,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(table: &OdtnInstance, i: usize) -> impl FnMut(usize) -> Result<usize> + '_ {
        move |e| match table.response(e, i) {
            Response::Det(o) => Ok(o),
            Response::Star => Ok(1),
        }
    }

    #[test]
    fn split_score_examples() {
        let t = OdtnInstance::from_rows(&["+--*"]).unwrap();
        assert_eq!(split_score(&t, &[true; 4], 0), Ratio::new(3, 2));
        let t = OdtnInstance::from_rows(&["****"]).unwrap();
        assert_eq!(split_score(&t, &[true; 4], 0), Ratio::new(0, 1));
    }

    #[test]
    fn budgets() {
        assert_eq!(confirmation_budget(16), 16);
        assert_eq!(duel_threshold(16), 8.0);
    }

    #[test]
    fn noiseless_runs_are_correct() {
        let t = OdtnInstance::from_rows(&["+-+-+-+-", "++--++--", "++++----", "+-------"]).unwrap();
        for i in 0..8 {
            let run = run_sparse(&t, &mut truth(&t, i)).unwrap();
            assert_eq!(run.transcript.verdict, Verdict::Identified(i));
            let elements: Vec<usize> = run.transcript.steps.iter().map(|s| s.element).collect();
            let mut dedup = elements.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), elements.len());
        }
    }

    #[test]
    fn member_singleton_in_z() {
        let t = OdtnInstance::from_rows(&["+-", "+-"]).unwrap();
        let mut run = SparseRunState::new(&t);
        let v = member(&[0], &mut truth(&t, 0), &mut run).unwrap();
        assert_eq!(v.outcome, MemberOutcome::Identified(0));
        assert_eq!(v.tests_used, 1);
    }

    #[test]
    fn member_rejects_when_truth_outside() {
        let t = OdtnInstance::from_rows(&["+-", "+-"]).unwrap();
        let mut run = SparseRunState::new(&t);
        let v = member(&[0], &mut truth(&t, 1), &mut run).unwrap();
        assert_eq!(v.outcome, MemberOutcome::NotInZ);
    }
}
