//! Decision trees for hypothesis identification when some test outcomes are
//! persistent uniform noise.
//!
//! Probabilities are exact rationals by default. Every algorithm is generic
//! over [`Scalar`], so `f64` can be swapped in where speed matters more than
//! exact ties.

pub mod adaptive;
pub mod bounds;
pub mod coverage;
pub mod document;
pub mod error;
pub mod harness;
pub mod model;
pub mod nonadaptive;
pub mod nonident;
pub mod scalar;
pub mod sparse;
pub mod state;
pub mod stop;
pub mod transcript;

pub use adaptive::{AdaptivePolicy, Policy, ScoreBreakdown, Variant};
pub use coverage::{AsrnInstance, CoverageFunction, EliminationCoverage, WeightedCoverage};
pub use document::{read_instance, write_instance, InstanceDocument};
pub use error::{Error, Result};
pub use model::{Alphabet, Observation, OdtnInstance, Response};
pub use nonident::{Criterion, SimilarityGraph};
pub use scalar::Scalar;
pub use state::{BeliefState, BranchStats};
pub use stop::StopRule;
pub use transcript::{OutcomeOracle, Phase, Step, Transcript, Verdict};

/// Exact probabilities.
pub type Exact = num_rational::BigRational;
pub type ExactState<'a> = BeliefState<'a, Exact>;
pub type FastState<'a> = BeliefState<'a, f64>;
