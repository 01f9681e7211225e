//! Corpus replay against stored expectations.
//!
//! A corpus directory holds `corpus.json` (the manifest), the instance
//! files it names, and `expected.csv` with blessed report rows.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::algo::{build_strategy, AlgoOptions, Algorithm};
use super::report::{csv_string, evaluate, read_csv, sort_rows, EvalConfig, ExactMode, ReportRow};
use crate::bounds::{compute_bounds, Caps};
use crate::document::read_instance;
use crate::error::{Error, Result};

pub const CORPUS_SCHEMA: &str = "odtn.corpus/1";
pub const MANIFEST: &str = "corpus.json";
pub const EXPECTED: &str = "expected.csv";

/// Absolute tolerances per column group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub exact: f64,
    pub mean_cost: f64,
    pub error_rate: f64,
    pub bounds: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { exact: 1e-6, mean_cost: 1e-6, error_rate: 1e-6, bounds: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub instance: String,
    pub algorithms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema: String,
    pub seed: u64,
    pub trials: u64,
    #[serde(default)]
    pub tolerance: Tolerance,
    pub entries: Vec<CorpusEntry>,
}

impl CorpusManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        let manifest: CorpusManifest = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{MANIFEST}: {e}")))?;
        if manifest.schema != CORPUS_SCHEMA {
            return Err(Error::Parse(format!("{MANIFEST}: unsupported schema {:?}", manifest.schema)));
        }
        Ok(manifest)
    }
}

/// Instance id used in report rows: the file name without extension.
pub fn instance_id(file: &str) -> String {
    Path::new(file).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| file.to_string())
}

/// Evaluates every manifest entry.
pub fn run_corpus(dir: &Path, caps: &Caps) -> Result<Vec<ReportRow>> {
    let manifest = CorpusManifest::load(dir)?;
    let mut rows = Vec::new();
    for entry in &manifest.entries {
        let path: PathBuf = dir.join(&entry.instance);
        let table = read_instance(&path)?;
        let id = instance_id(&entry.instance);
        let bounds = compute_bounds(&table, caps)?;
        let cfg = EvalConfig {
            trials: entry.trials.unwrap_or(manifest.trials),
            seed: Some(manifest.seed),
            exact: ExactMode::IfFeasible,
            star_cap: caps.stars,
        };
        let opts = AlgoOptions { seed: Some(manifest.seed), star_cap: caps.stars, ..AlgoOptions::default() };
        for name in &entry.algorithms {
            let alg: Algorithm = name.parse()?;
            let strategy = build_strategy(alg, &table, &opts)?;
            rows.push(evaluate(&id, &table, strategy.as_ref(), &cfg, &bounds)?.row());
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

fn close(a: &ReportRow, b: &ReportRow, column: &str, tol: f64) -> Option<String> {
    match (a.number(column), b.number(column)) {
        (None, None) => None,
        (Some(x), Some(y)) if (x - y).abs() <= tol => None,
        (x, y) => Some(format!("{column}: got {}, expected {}", show(x), show(y))),
    }
}

fn show(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

/// Differences between computed and expected rows, one message each.
pub fn compare(actual: &[ReportRow], expected: &[ReportRow], tol: &Tolerance) -> Vec<String> {
    let mut problems = Vec::new();
    for row in actual {
        let Some(exp) = expected.iter().find(|e| e.instance_id == row.instance_id && e.policy == row.policy) else {
            problems.push(format!("{} {}: no expectation", row.instance_id, row.policy));
            continue;
        };
        let checks = [
            ("trials", 0.0),
            ("mean_cost", tol.mean_cost),
            ("ci_halfwidth", tol.mean_cost),
            ("exact_cost", tol.exact),
            ("error_rate", tol.error_rate),
            ("entropy_lb", tol.bounds),
            ("ssc_lb", tol.bounds),
            ("sparsity_lb", 0.0),
            ("opt", tol.bounds),
        ];
        for (column, t) in checks {
            if let Some(msg) = close(row, exp, column, t) {
                problems.push(format!("{} {}: {msg}", row.instance_id, row.policy));
            }
        }
    }
    for exp in expected {
        if !actual.iter().any(|r| r.instance_id == exp.instance_id && r.policy == exp.policy) {
            problems.push(format!("{} {}: expected row not produced", exp.instance_id, exp.policy));
        }
    }
    problems
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressOutcome {
    pub rows: Vec<ReportRow>,
    /// Computed rows as CSV.
    pub csv: String,
    pub problems: Vec<String>,
    pub blessed: bool,
}

impl RegressOutcome {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for p in &self.problems {
            out.push_str(&format!("FAIL {p}\n"));
        }
        let verdict = if self.blessed {
            "blessed"
        } else if self.passed() {
            "ok"
        } else {
            "FAILED"
        };
        out.push_str(&format!("regress: {} rows, {} problems, {verdict}\n", self.rows.len(), self.problems.len()));
        out
    }
}

/// Replays `dir`; with `bless` the expectations are overwritten instead of
/// checked.
pub fn regress(dir: &Path, caps: &Caps, bless: bool) -> Result<RegressOutcome> {
    let tol = CorpusManifest::load(dir)?.tolerance;
    let rows = run_corpus(dir, caps)?;
    let csv = csv_string(&rows);
    let expected_path = dir.join(EXPECTED);
    if bless {
        fs::write(&expected_path, &csv)?;
        return Ok(RegressOutcome { rows, csv, problems: Vec::new(), blessed: true });
    }
    let expected = read_csv(fs::File::open(&expected_path)?)?;
    let problems = compare(&rows, &expected, &tol);
    Ok(RegressOutcome { rows, csv, problems, blessed: false })
}
