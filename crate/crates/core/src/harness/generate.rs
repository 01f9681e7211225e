//! Seeded synthetic instances with audited structural guarantees.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{uniform_prior, Alphabet, OdtnInstance, Response};
use crate::nonident::SimilarityGraph;

/// Whole-instance retries before giving up.
pub const MAX_ATTEMPTS: usize = 200;

/// Draws per column when looking for a fresh codeword.
const COLUMN_DRAWS: usize = 10_000;

/// Dirichlet weights are rounded to integers out of this total.
const PRIOR_RESOLUTION: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kind {
    /// No stars, all hypotheses pairwise separable.
    Noiseless,
    /// At most `c` stars per hypothesis and `r` per test, identifiable.
    LowNoise { c: usize, r: usize },
    /// Every deterministic side has at most `⌈m^alpha⌉` hypotheses,
    /// everything else is `*`; identifiable.
    Sparse { alpha: f64 },
    /// Similarity graph of maximum degree at most `d`.
    Nonident { d: usize },
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Noiseless => "noiseless",
            Kind::LowNoise { .. } => "low-noise",
            Kind::Sparse { .. } => "sparse",
            Kind::Nonident { .. } => "nonident",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Noiseless => write!(f, "noiseless"),
            Kind::LowNoise { c, r } => write!(f, "low-noise(c={c},r={r})"),
            Kind::Sparse { alpha } => write!(f, "sparse(alpha={alpha})"),
            Kind::Nonident { d } => write!(f, "nonident(d={d})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prior", rename_all = "kebab-case")]
pub enum PriorKind {
    Uniform,
    /// Symmetric Dirichlet, rounded to a rational prior.
    Dirichlet { concentration: f64 },
}

impl FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(PriorKind::Uniform);
        }
        let rest = s.strip_prefix("dirichlet").ok_or_else(|| Error::Parse(format!("unknown prior {s:?}")))?;
        let concentration = match rest.strip_prefix(':') {
            None if rest.is_empty() => 1.0,
            Some(v) => v.parse().map_err(|_| Error::Parse(format!("bad concentration in {s:?}")))?,
            None => return Err(Error::Parse(format!("unknown prior {s:?}"))),
        };
        Ok(PriorKind::Dirichlet { concentration })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenParams {
    pub kind: Kind,
    pub m: usize,
    pub n: usize,
    pub outcomes: usize,
    pub prior: PriorKind,
    pub seed: u64,
}

impl GenParams {
    pub fn new(kind: Kind, m: usize, n: usize, seed: u64) -> Self {
        GenParams { kind, m, n, outcomes: 2, prior: PriorKind::Uniform, seed }
    }
}

/// `⌈m^alpha⌉`, robust to `powf` landing a hair above an integer.
pub fn side_cap(m: usize, alpha: f64) -> usize {
    let x = (m as f64).powf(alpha);
    ((x - 1e-9).ceil() as usize).max(1)
}

fn alphabet(outcomes: usize) -> Result<Alphabet> {
    match outcomes {
        0 | 1 => Err(Error::Generation(format!("need at least two outcomes, got {outcomes}"))),
        2 => Ok(Alphabet::binary()),
        k => Alphabet::new((0..k).map(|o| o.to_string())),
    }
}

fn prior(kind: PriorKind, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<BigRational>> {
    match kind {
        PriorKind::Uniform => Ok(uniform_prior(m)),
        PriorKind::Dirichlet { concentration } => {
            let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::Generation(e.to_string()))?;
            let draws: Vec<f64> = (0..m).map(|_| gamma.sample(rng)).collect();
            let total: f64 = draws.iter().sum();
            let weights: Vec<u64> =
                draws.iter().map(|x| ((x / total * PRIOR_RESOLUTION).round() as u64).max(1)).collect();
            let sum: u64 = weights.iter().sum();
            Ok(weights.into_iter().map(|w| BigRational::new(BigInt::from(w), BigInt::from(sum))).collect())
        }
    }
}

type Grid = Vec<Vec<Response>>;

/// Columns drawn uniformly, each distinct from the earlier ones.
fn distinct_columns(m: usize, n: usize, omega: usize, rng: &mut ChaCha8Rng) -> Result<Grid> {
    let space = (omega as f64).powi(n.min(64) as i32);
    if space < m as f64 {
        return Err(Error::Generation(format!("{n} tests over {omega} outcomes cannot separate {m} hypotheses")));
    }
    let mut cols: Vec<Vec<usize>> = Vec::with_capacity(m);
    for _ in 0..m {
        let col = (0..COLUMN_DRAWS)
            .map(|_| (0..n).map(|_| rng.random_range(0..omega)).collect::<Vec<_>>())
            .find(|c| !cols.contains(c))
            .ok_or_else(|| Error::Generation("could not draw distinct columns".into()))?;
        cols.push(col);
    }
    Ok((0..n).map(|t| cols.iter().map(|c| Response::Det(c[t])).collect()).collect())
}

fn separated_by(grid: &Grid, t: usize, i: usize, j: usize) -> bool {
    matches!((grid[t][i], grid[t][j]), (Response::Det(a), Response::Det(b)) if a != b)
}

/// Whether `(i, j)` stays separated if `(t, k)` becomes a star, `k ∈ {i, j}`.
fn separated_without(grid: &Grid, t: usize, i: usize, j: usize) -> bool {
    (0..grid.len()).any(|u| u != t && separated_by(grid, u, i, j))
}

fn low_noise(m: usize, n: usize, omega: usize, c: usize, r: usize, rng: &mut ChaCha8Rng) -> Result<Grid> {
    let mut grid = distinct_columns(m, n, omega, rng)?;
    let mut row_stars = vec![0usize; n];
    let mut hyps: Vec<usize> = (0..m).collect();
    hyps.shuffle(rng);
    for &i in &hyps {
        let mut tests: Vec<usize> = (0..n).collect();
        tests.shuffle(rng);
        let mut placed = 0;
        for t in tests {
            if placed == c {
                break;
            }
            if row_stars[t] >= r {
                continue;
            }
            if (0..m).all(|j| j == i || !separated_by(&grid, t, i, j) || separated_without(&grid, t, i, j)) {
                grid[t][i] = Response::Star;
                row_stars[t] += 1;
                placed += 1;
            }
        }
    }
    Ok(grid)
}

fn sparse(m: usize, n: usize, omega: usize, cap: usize, rng: &mut ChaCha8Rng) -> Grid {
    let mut apart = vec![vec![false; m]; m];
    let mut grid = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![Response::Star; m];
        let mut side = vec![0usize; omega];
        let mut open: Vec<(usize, usize)> =
            (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).filter(|&(i, j)| !apart[i][j]).collect();
        open.shuffle(rng);
        for (i, j) in open {
            if row[i] != Response::Star || row[j] != Response::Star {
                continue;
            }
            let free: Vec<usize> = (0..omega).filter(|&o| side[o] < cap).collect();
            if free.len() < 2 {
                break;
            }
            let a = free[rng.random_range(0..free.len())];
            let rest: Vec<usize> = free.into_iter().filter(|&o| o != a).collect();
            let b = rest[rng.random_range(0..rest.len())];
            row[i] = Response::Det(a);
            row[j] = Response::Det(b);
            side[a] += 1;
            side[b] += 1;
        }
        let mut idle: Vec<usize> = (0..m).filter(|&i| row[i] == Response::Star).collect();
        idle.shuffle(rng);
        for i in idle {
            let free: Vec<usize> = (0..omega).filter(|&o| side[o] < cap).collect();
            if free.is_empty() {
                break;
            }
            let o = free[rng.random_range(0..free.len())];
            row[i] = Response::Det(o);
            side[o] += 1;
        }
        for i in 0..m {
            for j in i + 1..m {
                if matches!((row[i], row[j]), (Response::Det(a), Response::Det(b)) if a != b) {
                    apart[i][j] = true;
                }
            }
        }
        grid.push(row);
    }
    grid
}

fn nonident(m: usize, n: usize, omega: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Grid> {
    let mut grid = distinct_columns(m, n, omega, rng)?;
    let mut pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    pairs.shuffle(rng);
    let mut adj = vec![vec![false; m]; m];
    let mut degree = vec![0usize; m];
    for (i, j) in pairs {
        if degree[i] >= d || degree[j] >= d {
            continue;
        }
        // star one endpoint on every test that tells them apart, unless that
        // would merge it with a non-neighbour
        let ok = |grid: &Grid, adj: &Vec<Vec<bool>>, t: usize, k: usize, other: usize| {
            (0..m).all(|l| l == k || l == other || adj[k][l] || !separated_by(grid, t, k, l) || separated_without(grid, t, k, l))
        };
        let mut trial = grid.clone();
        let mut merged = true;
        for t in 0..n {
            if !separated_by(&trial, t, i, j) {
                continue;
            }
            let (first, second) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
            if ok(&trial, &adj, t, first, second) {
                trial[t][first] = Response::Star;
            } else if ok(&trial, &adj, t, second, first) {
                trial[t][second] = Response::Star;
            } else {
                merged = false;
                break;
            }
        }
        if merged {
            grid = trial;
            adj[i][j] = true;
            adj[j][i] = true;
            degree[i] += 1;
            degree[j] += 1;
        }
    }
    Ok(grid)
}

/// Structural guarantees of `kind` that `inst` violates; empty when it
/// passes.
pub fn audit(inst: &OdtnInstance, kind: Kind) -> Vec<String> {
    let mut issues = Vec::new();
    let identifiable = || inst.identifiability_witness().map(|(i, j)| format!("hypotheses {i} and {j} are not separable"));
    match kind {
        Kind::Noiseless => {
            if (0..inst.m()).any(|i| inst.column_stars(i) > 0) {
                issues.push("instance has stars".into());
            }
            issues.extend(identifiable());
        }
        Kind::LowNoise { c, r } => {
            if let Some(i) = (0..inst.m()).find(|&i| inst.column_stars(i) as usize > c) {
                issues.push(format!("hypothesis {i} has more than {c} stars"));
            }
            if let Some(t) = (0..inst.n()).find(|&t| inst.row_stars(t) > r) {
                issues.push(format!("test {t} has more than {r} stars"));
            }
            issues.extend(identifiable());
        }
        Kind::Sparse { alpha } => {
            let cap = side_cap(inst.m(), alpha);
            if inst.max_side() > cap {
                issues.push(format!("a test side exceeds {cap}"));
            }
            issues.extend(identifiable());
        }
        Kind::Nonident { d } => {
            let g = SimilarityGraph::new(inst);
            if g.max_degree() > d {
                issues.push(format!("similarity degree {} exceeds {d}", g.max_degree()));
            }
        }
    }
    issues
}

pub fn generate_instance(params: &GenParams) -> Result<OdtnInstance> {
    let GenParams { kind, m, n, outcomes, seed, .. } = *params;
    if m == 0 || n == 0 {
        return Err(Error::Generation(format!("need m, n >= 1, got m={m}, n={n}")));
    }
    if let Kind::Sparse { alpha } = kind {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Generation(format!("alpha must lie in [0, 1], got {alpha}")));
        }
    }
    let alphabet = alphabet(outcomes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = String::new();
    for _ in 0..MAX_ATTEMPTS {
        let grid = match kind {
            Kind::Noiseless => distinct_columns(m, n, outcomes, &mut rng)?,
            Kind::LowNoise { c, r } => low_noise(m, n, outcomes, c, r, &mut rng)?,
            Kind::Sparse { alpha } => sparse(m, n, outcomes, side_cap(m, alpha), &mut rng),
            Kind::Nonident { d } => nonident(m, n, outcomes, d, &mut rng)?,
        };
        let tests = grid.into_iter().enumerate().map(|(t, row)| (format!("T{t}"), row)).collect();
        let inst = OdtnInstance::new(alphabet.clone(), tests, prior(params.prior, m, &mut rng)?)?;
        let issues = audit(&inst, kind);
        if issues.is_empty() {
            return Ok(inst);
        }
        last = issues.join("; ");
    }
    Err(Error::Generation(format!("no {kind} instance with m={m}, n={n} after {MAX_ATTEMPTS} attempts: {last}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::InstanceDocument;

    #[test]
    fn noiseless_small() {
        let inst = generate_instance(&GenParams::new(Kind::Noiseless, 4, 4, 1)).unwrap();
        assert!(inst.is_identifiable());
        let stats = inst.uncertainty_stats().unwrap();
        assert_eq!((stats.column, stats.row), (0, 0));
    }

    #[test]
    fn sparse_sides() {
        assert_eq!(side_cap(16, 0.5), 4);
        assert_eq!(side_cap(32, 0.5), 6);
        let inst = generate_instance(&GenParams::new(Kind::Sparse { alpha: 0.5 }, 16, 40, 3)).unwrap();
        assert!(inst.max_side() <= 4);
        assert!(inst.is_identifiable());
    }

    #[test]
    fn low_noise_limits() {
        for seed in 0..10 {
            let inst = generate_instance(&GenParams::new(Kind::LowNoise { c: 2, r: 3 }, 10, 12, seed)).unwrap();
            let stats = inst.uncertainty_stats().unwrap();
            assert!(stats.column <= 2 && stats.row <= 3);
            assert!(inst.is_identifiable());
        }
    }

    #[test]
    fn nonident_degree() {
        for seed in 0..10 {
            let inst = generate_instance(&GenParams::new(Kind::Nonident { d: 2 }, 9, 10, seed)).unwrap();
            assert!(SimilarityGraph::new(&inst).max_degree() <= 2);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let mut p = GenParams::new(Kind::LowNoise { c: 3, r: 3 }, 8, 10, 42);
        p.prior = PriorKind::Dirichlet { concentration: 0.7 };
        p.outcomes = 3;
        let a = InstanceDocument::from_instance(&generate_instance(&p).unwrap()).to_json();
        let b = InstanceDocument::from_instance(&generate_instance(&p).unwrap()).to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn impossible_parameters() {
        assert!(matches!(generate_instance(&GenParams::new(Kind::Noiseless, 9, 3, 0)), Err(Error::Generation(_))));
        assert!(matches!(generate_instance(&GenParams::new(Kind::Sparse { alpha: 0.0 }, 6, 3, 0)), Err(Error::Generation(_))));
    }

    #[test]
    fn prior_parsing() {
        assert_eq!("uniform".parse::<PriorKind>().unwrap(), PriorKind::Uniform);
        assert_eq!("dirichlet".parse::<PriorKind>().unwrap(), PriorKind::Dirichlet { concentration: 1.0 });
        assert_eq!("dirichlet:0.5".parse::<PriorKind>().unwrap(), PriorKind::Dirichlet { concentration: 0.5 });
        assert!("dirichletx".parse::<PriorKind>().is_err());
    }
}
