//! Instances: outcome alphabets, the test/hypothesis response table and the
//! prior, plus static diagnostics (identifiability, noise statistics,
//! sparsity).

use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STAR: &str = "*";

/// An observed `(element, outcome index)` pair.
pub type Observation = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<I, T>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::Domain("outcome alphabet is empty".into()));
        }
        for (k, s) in symbols.iter().enumerate() {
            if s == STAR {
                return Err(Error::Domain("\"*\" is reserved and cannot be an outcome".into()));
            }
            if symbols[..k].contains(s) {
                return Err(Error::Domain(format!("duplicate outcome {s:?}")));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// The ODTN alphabet `{+, -}`.
    pub fn binary() -> Self {
        Alphabet { symbols: vec!["+".into(), "-".into()] }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == label)
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.symbols[idx]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn parse_response(&self, label: &str) -> Option<Response> {
        if label == STAR {
            Some(Response::Star)
        } else {
            self.index_of(label).map(Response::Det)
        }
    }

    pub fn response_label(&self, r: Response) -> &str {
        match r {
            Response::Det(o) => self.label(o),
            Response::Star => STAR,
        }
    }
}

/// Entry of the response table: a deterministic outcome or a noisy `*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Response {
    Det(usize),
    Star,
}

impl Response {
    pub fn is_star(self) -> bool {
        matches!(self, Response::Star)
    }

    /// Whether observing `outcome` contradicts this entry.
    pub fn contradicts(self, outcome: usize) -> bool {
        matches!(self, Response::Det(o) if o != outcome)
    }
}

/// A problem instance: `n` tests (elements) by `m` hypotheses (scenarios).
#[derive(Clone, Debug, PartialEq)]
pub struct OdtnInstance {
    alphabet: Alphabet,
    names: Vec<String>,
    rows: Vec<Vec<Response>>,
    prior: Vec<BigRational>,
    column_stars: Vec<u32>,
}

impl OdtnInstance {
    /// Builds an instance; the prior must sum to exactly one.
    pub fn new(alphabet: Alphabet, tests: Vec<(String, Vec<Response>)>, prior: Vec<BigRational>) -> Result<Self> {
        let m = prior.len();
        let mut report = ValidationReport::default();
        let mut names = Vec::with_capacity(tests.len());
        let mut rows = Vec::with_capacity(tests.len());
        for (t, (name, row)) in tests.into_iter().enumerate() {
            if row.len() != m {
                report.issues.push(Issue::RowLength { test: t, expected: m, found: row.len() });
            }
            for (i, r) in row.iter().enumerate() {
                if let Response::Det(o) = r {
                    if *o >= alphabet.len() {
                        report.issues.push(Issue::UnknownSymbol { test: t, hypothesis: i, symbol: format!("#{o}") });
                    }
                }
            }
            names.push(name);
            rows.push(row);
        }
        if let Some(i) = prior.iter().position(|p| p.is_negative()) {
            report.issues.push(Issue::NegativePrior { hypothesis: i });
        }
        let total: BigRational = prior.iter().sum();
        if total != BigRational::one() {
            report.issues.push(Issue::PriorSum { sum: ratio_to_f64(&total) });
        }
        if m == 0 {
            report.issues.push(Issue::NoHypotheses);
        }
        if !report.is_valid() {
            return Err(Error::InvalidInstance(report));
        }
        let column_stars = (0..m)
            .map(|i| rows.iter().filter(|row| row[i].is_star()).count() as u32)
            .collect();
        Ok(OdtnInstance { alphabet, names, rows, prior, column_stars })
    }

    /// Convenience constructor for binary instances written as packed rows
    /// such as `"+-*"` with a uniform prior.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let m = rows.first().map(|r| r.chars().count()).unwrap_or(0);
        Self::from_rows_with_prior(rows, uniform_prior(m))
    }

    pub fn from_rows_with_prior(rows: &[&str], prior: Vec<BigRational>) -> Result<Self> {
        let alphabet = Alphabet::binary();
        let tests = rows
            .iter()
            .enumerate()
            .map(|(t, row)| {
                let parsed = row
                    .chars()
                    .map(|c| {
                        alphabet
                            .parse_response(&c.to_string())
                            .ok_or_else(|| Error::Parse(format!("unknown symbol {c:?} in row {t}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((format!("T{t}"), parsed))
            })
            .collect::<Result<Vec<_>>>()?;
        OdtnInstance::new(alphabet, tests, prior)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Number of hypotheses.
    pub fn m(&self) -> usize {
        self.prior.len()
    }

    /// Number of tests.
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn response(&self, test: usize, hypothesis: usize) -> Response {
        self.rows[test][hypothesis]
    }

    pub fn row(&self, test: usize) -> &[Response] {
        &self.rows[test]
    }

    pub fn test_name(&self, test: usize) -> &str {
        &self.names[test]
    }

    pub fn test_names(&self) -> &[String] {
        &self.names
    }

    pub fn prior(&self) -> &[BigRational] {
        &self.prior
    }

    /// `c_i`: number of tests with a `*` entry for hypothesis `i`.
    pub fn column_stars(&self, hypothesis: usize) -> u32 {
        self.column_stars[hypothesis]
    }

    /// `|T^*|` for test `t`.
    pub fn row_stars(&self, test: usize) -> usize {
        self.rows[test].iter().filter(|r| r.is_star()).count()
    }

    /// Hypotheses with outcome `outcome` on `test`.
    pub fn side(&self, test: usize, outcome: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[test]
            .iter()
            .enumerate()
            .filter(move |(_, r)| **r == Response::Det(outcome))
            .map(|(i, _)| i)
    }

    pub fn side_len(&self, test: usize, outcome: usize) -> usize {
        self.side(test, outcome).count()
    }

    /// Whether `test` separates `i` and `j` deterministically.
    pub fn separates(&self, test: usize, i: usize, j: usize) -> bool {
        match (self.rows[test][i], self.rows[test][j]) {
            (Response::Det(a), Response::Det(b)) => a != b,
            _ => false,
        }
    }

    pub fn is_separable(&self, i: usize, j: usize) -> bool {
        (0..self.n()).any(|t| self.separates(t, i, j))
    }

    /// Returns the first pair `(i, j)`, `i < j`, that no test separates
    /// deterministically, or `None` when the instance is identifiable.
    pub fn identifiability_witness(&self) -> Option<(usize, usize)> {
        let m = self.m();
        for i in 0..m {
            for j in i + 1..m {
                if !self.is_separable(i, j) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_identifiable(&self) -> bool {
        self.identifiability_witness().is_none()
    }

    pub fn uncertainty_stats(&self) -> Result<UncertaintyStats> {
        let m = self.m();
        if m < 2 {
            return Err(Error::Degenerate(format!("uncertainty statistics need m >= 2, got {m}")));
        }
        let column = self.column_stars.iter().copied().max().unwrap_or(0);
        let row = (0..self.n()).map(|t| self.row_stars(t)).max().unwrap_or(0);
        let max_side = self.max_side();
        let alpha = if max_side <= 1 { 0.0 } else { (max_side as f64).ln() / (m as f64).ln() };
        Ok(UncertaintyStats { column, row, max_side, alpha })
    }

    /// `max_T max_o |T^o|`.
    pub fn max_side(&self) -> usize {
        (0..self.n())
            .flat_map(|t| (0..self.alphabet.len()).map(move |o| (t, o)))
            .map(|(t, o)| self.side_len(t, o))
            .max()
            .unwrap_or(0)
    }

    /// Largest number of hypotheses a single observation can rule out:
    /// `max_T max_o |{j : r_j(T) deterministic and != o}|`. Equals
    /// [`max_side`](Self::max_side) for binary alphabets.
    pub fn max_elimination(&self) -> usize {
        (0..self.n())
            .flat_map(|t| (0..self.alphabet.len()).map(move |o| (t, o)))
            .map(|(t, o)| self.rows[t].iter().filter(|r| r.contradicts(o)).count())
            .max()
            .unwrap_or(0)
    }

    /// `1/(m-1)`, the separability of the elimination coverage functions.
    pub fn separability(&self) -> Result<Ratio<u64>> {
        let m = self.m();
        if m < 2 {
            return Err(Error::Degenerate(format!("separability needs m >= 2, got {m}")));
        }
        Ok(Ratio::new(1, m as u64 - 1))
    }

    /// Fraction of hypotheses other than `hypothesis` ruled out by at least
    /// one observation in `observed`.
    pub fn coverage_value(&self, hypothesis: usize, observed: &[Observation]) -> Result<Ratio<u64>> {
        let m = self.m();
        if m < 2 {
            return Err(Error::Degenerate(format!("coverage needs m >= 2, got {m}")));
        }
        Ok(Ratio::new(self.eliminated_count(hypothesis, observed) as u64, m as u64 - 1))
    }

    /// Number of hypotheses `j != hypothesis` contradicted by `observed`.
    pub fn eliminated_count(&self, hypothesis: usize, observed: &[Observation]) -> usize {
        (0..self.m())
            .filter(|&j| j != hypothesis)
            .filter(|&j| observed.iter().any(|&(t, o)| self.rows[t][j].contradicts(o)))
            .count()
    }

    /// Whether `hypothesis` is compatible with every observation.
    pub fn compatible(&self, hypothesis: usize, observed: &[Observation]) -> bool {
        observed.iter().all(|&(t, o)| !self.rows[t][hypothesis].contradicts(o))
    }

    pub fn positive_prior_count(&self) -> usize {
        self.prior.iter().filter(|p| p.is_positive()).count()
    }

    /// Same table with a different prior (which must sum to one).
    pub fn with_prior(&self, prior: Vec<BigRational>) -> Result<Self> {
        let tests = self.names.iter().cloned().zip(self.rows.iter().cloned()).collect();
        OdtnInstance::new(self.alphabet.clone(), tests, prior)
    }

    /// Same tests in a different order: `order[k]` is the old index of the
    /// new test `k`.
    pub fn reorder_tests(&self, order: &[usize]) -> Result<Self> {
        let tests = order.iter().map(|&t| (self.names[t].clone(), self.rows[t].clone())).collect();
        OdtnInstance::new(self.alphabet.clone(), tests, self.prior.clone())
    }

    /// Relabels hypotheses: new hypothesis `k` is old hypothesis `perm[k]`.
    pub fn relabel_hypotheses(&self, perm: &[usize]) -> Result<Self> {
        let tests = self
            .names
            .iter()
            .zip(&self.rows)
            .map(|(name, row)| (name.clone(), perm.iter().map(|&i| row[i]).collect()))
            .collect();
        let prior = perm.iter().map(|&i| self.prior[i].clone()).collect();
        OdtnInstance::new(self.alphabet.clone(), tests, prior)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyStats {
    /// Column uncertainty `c`: most stars for one hypothesis.
    pub column: u32,
    /// Row uncertainty `r`: most stars for one test.
    pub row: usize,
    /// `max_T max_o |T^o|`.
    pub max_side: usize,
    /// Sparsity exponent: `log_m(max_side)`, zero when `max_side <= 1`.
    pub alpha: f64,
}

pub fn uniform_prior(m: usize) -> Vec<BigRational> {
    (0..m).map(|_| BigRational::new(BigInt::one(), BigInt::from(m.max(1)))).collect()
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.issues.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Issue {
    Alphabet(String),
    NoHypotheses,
    RowLength { test: usize, expected: usize, found: usize },
    UnknownSymbol { test: usize, hypothesis: usize, symbol: String },
    BadPrior { hypothesis: usize, text: String },
    NegativePrior { hypothesis: usize },
    PriorSum { sum: f64 },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::Alphabet(msg) => write!(f, "bad outcome alphabet: {msg}"),
            Issue::NoHypotheses => write!(f, "instance has no hypotheses"),
            Issue::RowLength { test, expected, found } => {
                write!(f, "test {test} has {found} entries, expected {expected}")
            }
            Issue::UnknownSymbol { test, hypothesis, symbol } => {
                write!(f, "unknown symbol {symbol:?} at test {test}, hypothesis {hypothesis}")
            }
            Issue::BadPrior { hypothesis, text } => write!(f, "prior entry {hypothesis} is not a rational: {text:?}"),
            Issue::NegativePrior { hypothesis } => write!(f, "prior entry {hypothesis} is negative"),
            Issue::PriorSum { sum } => write!(f, "prior sums to {sum}"),
        }
    }
}
