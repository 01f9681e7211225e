//! When a policy may stop.

use std::sync::Arc;

use crate::nonident::{stopping_satisfied, Criterion, SimilarityGraph};
use crate::scalar::Scalar;
use crate::state::BeliefState;

#[derive(Clone, Debug)]
pub enum StopRule {
    /// Every compatible scenario is covered.
    AllCovered,
    /// The compatible set is acceptable under a similarity-graph criterion.
    Similarity { graph: Arc<SimilarityGraph>, criterion: Criterion },
}

impl StopRule {
    pub fn similarity(graph: SimilarityGraph, criterion: Criterion) -> Self {
        StopRule::Similarity { graph: Arc::new(graph), criterion }
    }

    pub fn is_satisfied<S: Scalar>(&self, state: &BeliefState<'_, S>) -> bool {
        match self {
            StopRule::AllCovered => state.all_covered(),
            StopRule::Similarity { graph, criterion } => stopping_satisfied(graph, &state.compatible_set(), *criterion),
        }
    }

    /// Mass that pays for one more step at `state`.
    pub fn charged_mass<S: Scalar>(&self, state: &BeliefState<'_, S>) -> S {
        if self.is_satisfied(state) {
            return S::zero();
        }
        match self {
            StopRule::AllCovered => state.pending_mass(),
            StopRule::Similarity { .. } => state.alive_mass(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StopRule::AllCovered => "unique",
            StopRule::Similarity { criterion, .. } => criterion.name(),
        }
    }
}
