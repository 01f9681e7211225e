//! Run records and the outcome-oracle interface every algorithm talks to.

use serde::{Deserialize, Serialize};

use crate::coverage::AsrnInstance;
use crate::error::{Error, Result};
use crate::model::Observation;
use crate::scalar::Scalar;
use crate::state::BeliefState;

/// Supplies the outcome of a requested element.
pub trait OutcomeOracle {
    fn answer(&mut self, element: usize) -> Result<usize>;
}

impl<F: FnMut(usize) -> Result<usize>> OutcomeOracle for F {
    fn answer(&mut self, element: usize) -> Result<usize> {
        self(element)
    }
}

/// Which part of an algorithm selected a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Greedy,
    Member,
    Split,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub element: usize,
    pub outcome: usize,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// A single scenario was identified.
    Identified(usize),
    /// The run stopped on a set of mutually confusable candidates.
    Candidates(Vec<usize>),
    /// Every remaining scenario is covered but none is singled out.
    AllCovered,
}

impl Verdict {
    /// Whether the verdict is compatible with `truth`.
    pub fn contains(&self, truth: usize) -> bool {
        match self {
            Verdict::Identified(i) => *i == truth,
            Verdict::Candidates(k) => k.contains(&truth),
            Verdict::AllCovered => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub policy: String,
    pub steps: Vec<Step>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Transcript {
    pub fn new(policy: impl Into<String>) -> Self {
        Transcript { policy: policy.into(), steps: Vec::new(), verdict: Verdict::AllCovered, seed: None }
    }

    pub fn test_count(&self) -> usize {
        self.steps.len()
    }

    pub fn observations(&self) -> Vec<Observation> {
        self.steps.iter().map(|s| (s.element, s.outcome)).collect()
    }

    pub fn count_phase(&self, phase: Phase) -> usize {
        self.steps.iter().filter(|s| s.phase == phase).count()
    }

    /// Replays the steps through a fresh belief state.
    pub fn replay<'a, S: Scalar>(&self, inst: &'a AsrnInstance) -> Result<BeliefState<'a, S>> {
        BeliefState::replay(inst, &self.observations())
    }

    /// Checks that elements are distinct and that the verdict agrees with
    /// the replayed compatible set.
    pub fn verify(&self, inst: &AsrnInstance) -> Result<()> {
        let state = self.replay::<f64>(inst)?;
        let alive = state.compatible_set();
        let ok = match &self.verdict {
            Verdict::Identified(i) => alive.contains(i),
            Verdict::Candidates(k) => k.iter().all(|i| alive.contains(i)),
            Verdict::AllCovered => state.all_covered(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invariant(format!("verdict {:?} disagrees with compatible set {:?}", self.verdict, alive)))
        }
    }
}

/// Asks the oracle and checks the answer against the alphabet size.
pub(crate) fn ask(oracle: &mut dyn OutcomeOracle, element: usize, omega: usize) -> Result<usize> {
    let o = oracle.answer(element)?;
    if o >= omega {
        return Err(Error::UnknownOutcome(format!("#{o}")));
    }
    Ok(o)
}
