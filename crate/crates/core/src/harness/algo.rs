//! Named algorithms, wrapped as strategies the evaluators can run.

use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use crate::adaptive::{choose_variant, run_policy, AdaptivePolicy, Policy, Variant};
use crate::coverage::AsrnInstance;
use crate::error::{Error, Result};
use crate::model::OdtnInstance;
use crate::nonadaptive::{build_permutation, default_sample_count, merge_tiny_priors, FixedOrder, GainEstimator, RankingResult};
use crate::nonident::{Criterion, NonidentPolicy};
use crate::scalar::Scalar;
use crate::sparse::run_sparse;
use crate::transcript::{OutcomeOracle, Transcript};
use crate::Exact;

/// Anything that can identify a hypothesis by querying an oracle.
pub trait Strategy: Send + Sync {
    fn name(&self) -> String;

    fn run(&self, oracle: &mut dyn OutcomeOracle) -> Result<Transcript>;
}

/// A [`Policy`] evaluated with scalar type `S`.
pub struct PolicyStrategy<P, S> {
    inst: AsrnInstance,
    policy: P,
    name: String,
    _scalar: PhantomData<fn() -> S>,
}

impl<P: Policy<S> + Send, S: Scalar> PolicyStrategy<P, S> {
    pub fn new(inst: AsrnInstance, policy: P) -> Self {
        let name = policy.name();
        PolicyStrategy { inst, policy, name, _scalar: PhantomData }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn policy(&self) -> &P {
        &self.policy
    }

    pub fn instance(&self) -> &AsrnInstance {
        &self.inst
    }
}

impl<P: Policy<S> + Send, S: Scalar> Strategy for PolicyStrategy<P, S> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn run(&self, oracle: &mut dyn OutcomeOracle) -> Result<Transcript> {
        let mut t = run_policy::<S>(&self.inst, &self.policy, oracle)?;
        t.policy = self.name.clone();
        Ok(t)
    }
}

pub struct SparseStrategy {
    table: OdtnInstance,
}

impl SparseStrategy {
    pub fn new(table: OdtnInstance) -> Result<Self> {
        if let Some((i, j)) = table.identifiability_witness() {
            return Err(Error::NotIdentifiable(i, j));
        }
        Ok(SparseStrategy { table })
    }
}

impl Strategy for SparseStrategy {
    fn name(&self) -> String {
        "sparse".into()
    }

    fn run(&self, oracle: &mut dyn OutcomeOracle) -> Result<Transcript> {
        Ok(run_sparse(&self.table, oracle)?.transcript)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Nonadaptive,
    AdaptiveC,
    AdaptiveR,
    Meta,
    Sparse,
    NonidentClique,
    NonidentNeighborhood,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Nonadaptive,
        Algorithm::AdaptiveC,
        Algorithm::AdaptiveR,
        Algorithm::Meta,
        Algorithm::Sparse,
        Algorithm::NonidentClique,
        Algorithm::NonidentNeighborhood,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Nonadaptive => "nonadaptive",
            Algorithm::AdaptiveC => "adaptive-c",
            Algorithm::AdaptiveR => "adaptive-r",
            Algorithm::Meta => "meta",
            Algorithm::Sparse => "sparse",
            Algorithm::NonidentClique => "nonident-clique",
            Algorithm::NonidentNeighborhood => "nonident-neighborhood",
        }
    }

    /// Whether building the strategy itself draws random numbers.
    pub fn needs_seed(self, gains: Gains) -> bool {
        self == Algorithm::Nonadaptive && gains != Gains::Exact
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm {s:?}")))
    }
}

/// How the non-adaptive ranking estimates gains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gains {
    /// `⌈m³ n⁴ / ε⌉` samples per estimate.
    Formula,
    Samples(u64),
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlgoOptions {
    pub gains: Gains,
    pub seed: Option<u64>,
    pub star_cap: u32,
    /// Score with `f64` instead of exact rationals.
    pub fast: bool,
}

impl Default for AlgoOptions {
    fn default() -> Self {
        AlgoOptions { gains: Gains::Exact, seed: None, star_cap: crate::nonadaptive::DEFAULT_STAR_CAP, fast: false }
    }
}

fn boxed<P: Policy<Exact> + Policy<f64> + Send + 'static>(inst: AsrnInstance, policy: P, name: String, fast: bool) -> Box<dyn Strategy> {
    if fast {
        Box::new(PolicyStrategy::<P, f64>::new(inst, policy).named(name))
    } else {
        Box::new(PolicyStrategy::<P, Exact>::new(inst, policy).named(name))
    }
}

/// Ranking used by the non-adaptive strategy; tiny priors are merged first.
pub fn nonadaptive_ranking(table: &OdtnInstance, opts: &AlgoOptions) -> Result<RankingResult> {
    let inst = merge_tiny_priors(&AsrnInstance::odtn(table)?)?;
    let seed = || opts.seed.ok_or_else(|| Error::Domain("sampled gains need a seed".into()));
    let estimator = match opts.gains {
        Gains::Exact => GainEstimator::Exact { cap: opts.star_cap },
        Gains::Samples(samples) => GainEstimator::Sampled { samples, seed: seed()? },
        Gains::Formula => {
            let m = inst.table().positive_prior_count();
            GainEstimator::Sampled { samples: default_sample_count(m, inst.n(), inst.separability()), seed: seed()? }
        }
    };
    build_permutation(&inst, estimator)
}

pub fn build_strategy(alg: Algorithm, table: &OdtnInstance, opts: &AlgoOptions) -> Result<Box<dyn Strategy>> {
    let inst = AsrnInstance::odtn(table)?;
    Ok(match alg {
        Algorithm::Nonadaptive => {
            let ranking = nonadaptive_ranking(table, opts)?;
            let policy = FixedOrder { name: alg.id().into(), order: ranking.permutation };
            boxed(inst, policy, alg.id().into(), opts.fast)
        }
        Algorithm::AdaptiveC => boxed(inst, AdaptivePolicy::new(Variant::ScoreC), alg.id().into(), opts.fast),
        Algorithm::AdaptiveR => boxed(inst, AdaptivePolicy::new(Variant::ScoreR), alg.id().into(), opts.fast),
        Algorithm::Meta => {
            let variant = choose_variant(table)?;
            boxed(inst, AdaptivePolicy::new(variant), format!("meta:{}", variant.name()), opts.fast)
        }
        Algorithm::Sparse => Box::new(SparseStrategy::new(table.clone())?),
        Algorithm::NonidentClique | Algorithm::NonidentNeighborhood => {
            let criterion = if alg == Algorithm::NonidentClique { Criterion::Clique } else { Criterion::Neighborhood };
            boxed(inst, NonidentPolicy::new(table, criterion)?, alg.id().into(), opts.fast)
        }
    })
}
