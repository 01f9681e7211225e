//! Instances where some hypothesis pairs cannot be told apart.
//!
//! Phase 1 runs the adaptive greedy policy on the relaxed coverage that is
//! satisfied once at most `d + 1` hypotheses remain (`d` is the maximum degree
//! of the similarity graph). Phase 2 keeps splitting the compatible set with
//! the lowest-index splitting test until the stopping criterion holds.

use num_rational::Ratio;

use crate::adaptive::{choose_variant, AdaptivePolicy, Policy, Variant};
use crate::coverage::AsrnInstance;
use crate::error::{Error, Result};
use crate::model::{Observation, OdtnInstance, Response};
use crate::scalar::Scalar;
use crate::state::BeliefState;
use crate::stop::StopRule;
use crate::transcript::{OutcomeOracle, Phase, Transcript, Verdict};

/// Edge `(i, j)` iff no test separates `i` and `j` deterministically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimilarityGraph {
    adj: Vec<Vec<bool>>,
    degree: Vec<usize>,
}

impl SimilarityGraph {
    pub fn new(table: &OdtnInstance) -> Self {
        let m = table.m();
        let mut adj = vec![vec![false; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                let similar = !table.is_separable(i, j);
                adj[i][j] = similar;
                adj[j][i] = similar;
            }
        }
        let degree = adj.iter().map(|row| row.iter().filter(|&&b| b).count()).collect();
        SimilarityGraph { adj, degree }
    }

    pub fn m(&self) -> usize {
        self.adj.len()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i][j]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    /// `d`.
    pub fn max_degree(&self) -> usize {
        self.degree.iter().copied().max().unwrap_or(0)
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.m()).filter(move |&j| self.adj[i][j])
    }

    /// `D_i = {i} ∪ neighbors(i)`.
    pub fn closed_neighborhood(&self, i: usize) -> Vec<usize> {
        (0..self.m()).filter(|&j| j == i || self.adj[i][j]).collect()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let m = self.m();
        (0..m).flat_map(|i| (i + 1..m).filter(move |&j| self.adj[i][j]).map(move |j| (i, j))).collect()
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(a, &i)| set[a + 1..].iter().all(|&j| self.adj[i][j]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// The compatible set lies inside some `D_i`.
    Neighborhood,
    /// The compatible set is a clique.
    Clique,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Neighborhood => "neighborhood",
            Criterion::Clique => "clique",
        }
    }
}

pub fn stopping_satisfied(graph: &SimilarityGraph, compatible: &[usize], criterion: Criterion) -> bool {
    match criterion {
        Criterion::Clique => graph.is_clique(compatible),
        Criterion::Neighborhood => {
            (0..graph.m()).any(|c| compatible.iter().all(|&k| k == c || graph.adjacent(c, k)))
        }
    }
}

/// `min(eliminated / (m - d - 1), 1)`.
pub fn ftilde_value(table: &OdtnInstance, hypothesis: usize, observed: &[Observation], d: usize) -> Result<Ratio<u64>> {
    let m = table.m();
    if m < d + 2 {
        return Err(Error::Degenerate(format!("relaxed coverage needs m >= d + 2 (m = {m}, d = {d})")));
    }
    let quota = m - d - 1;
    Ok(Ratio::new(table.eliminated_count(hypothesis, observed).min(quota) as u64, quota as u64))
}

/// Lowest-index unselected test with two different deterministic outcomes
/// inside `compatible`.
pub fn splitting_test(table: &OdtnInstance, selected: &[bool], compatible: &[usize]) -> Option<usize> {
    (0..table.n()).filter(|&t| !selected[t]).find(|&t| {
        let mut seen = None;
        compatible.iter().any(|&i| match table.response(t, i) {
            Response::Det(o) => match seen {
                None => {
                    seen = Some(o);
                    false
                }
                Some(s) => s != o,
            },
            Response::Star => false,
        })
    })
}

/// The two-phase procedure as a [`Policy`] over states of the ODTN instance.
#[derive(Clone, Debug)]
pub struct NonidentPolicy {
    relaxed: Option<AsrnInstance>,
    greedy: AdaptivePolicy,
    stop: StopRule,
}

impl NonidentPolicy {
    pub fn new(table: &OdtnInstance, criterion: Criterion) -> Result<Self> {
        let graph = SimilarityGraph::new(table);
        let d = graph.max_degree();
        let relaxed = if table.m() >= d + 2 { Some(AsrnInstance::relaxed(table, d)?) } else { None };
        let variant = if table.m() >= 2 { choose_variant(table)? } else { Variant::ScoreC };
        Ok(NonidentPolicy { relaxed, greedy: AdaptivePolicy::new(variant), stop: StopRule::similarity(graph, criterion) })
    }

    pub fn variant(&self) -> Variant {
        self.greedy.variant
    }

    pub fn stop_rule(&self) -> &StopRule {
        &self.stop
    }

    pub fn graph(&self) -> &SimilarityGraph {
        match &self.stop {
            StopRule::Similarity { graph, .. } => graph,
            StopRule::AllCovered => unreachable!("nonident policies always stop on the similarity graph"),
        }
    }

    fn criterion(&self) -> Criterion {
        match &self.stop {
            StopRule::Similarity { criterion, .. } => *criterion,
            StopRule::AllCovered => unreachable!("nonident policies always stop on the similarity graph"),
        }
    }
}

impl<S: Scalar> Policy<S> for NonidentPolicy {
    fn name(&self) -> String {
        format!("nonident-{}", self.criterion().name())
    }

    fn next(&self, state: &BeliefState<'_, S>) -> Result<Option<usize>> {
        Ok(self.next_step(state)?.map(|(e, _)| e))
    }

    fn next_step(&self, state: &BeliefState<'_, S>) -> Result<Option<(usize, Phase)>> {
        let compatible = state.compatible_set();
        if compatible.is_empty() {
            return Err(Error::Inconsistent);
        }
        if self.stop.is_satisfied(state) {
            return Ok(None);
        }
        if let Some(relaxed) = &self.relaxed {
            let shadow = BeliefState::<S>::replay(relaxed, state.selected())?;
            if !shadow.all_covered() {
                return Ok(Policy::<S>::next(&self.greedy, &shadow)?.map(|e| (e, Phase::Greedy)));
            }
        }
        let table = state.instance().table();
        let selected: Vec<bool> = (0..table.n()).map(|t| state.is_selected(t)).collect();
        match splitting_test(table, &selected, &compatible) {
            Some(t) => Ok(Some((t, Phase::Split))),
            None => Err(Error::StoppingUnreachable),
        }
    }

    fn verdict(&self, state: &BeliefState<'_, S>) -> Verdict {
        match state.compatible_set().as_slice() {
            [only] => Verdict::Identified(*only),
            k => Verdict::Candidates(k.to_vec()),
        }
    }
}

/// Runs the two-phase procedure on an ODTN table.
pub fn run_nonident(table: &OdtnInstance, criterion: Criterion, oracle: &mut dyn OutcomeOracle) -> Result<Transcript> {
    let inst = AsrnInstance::odtn(table)?;
    let policy = NonidentPolicy::new(table, criterion)?;
    crate::adaptive::run_policy::<num_rational::BigRational>(&inst, &policy, oracle)
}
