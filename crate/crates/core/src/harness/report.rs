//! Evaluation reports and their CSV rows.

use std::io::{Read, Write};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::algo::Strategy;
use super::eval::{exact_strategy_cost, monte_carlo_cost, ExactCost, MonteCarlo};
use crate::bounds::BoundsReport;
use crate::document::format_rational;
use crate::error::{Error, Result};
use crate::model::{ratio_to_f64, OdtnInstance};

pub const REPORT_SCHEMA: &str = "odtn.report/1";

pub const CSV_COLUMNS: [&str; 12] = [
    "instance_id",
    "policy",
    "trials",
    "mean_cost",
    "ci_halfwidth",
    "exact_cost",
    "error_rate",
    "entropy_lb",
    "ssc_lb",
    "sparsity_lb",
    "opt",
    "schema",
];

/// Fixed six-decimal rendering used in every CSV cell.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// One CSV line. Numbers are pre-rendered so that rows compare and
/// serialize byte for byte; absent values are empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance_id: String,
    pub policy: String,
    pub trials: u64,
    pub mean_cost: String,
    pub ci_halfwidth: String,
    pub exact_cost: String,
    pub error_rate: String,
    pub entropy_lb: String,
    pub ssc_lb: String,
    pub sparsity_lb: String,
    pub opt: String,
    pub schema: String,
}

impl ReportRow {
    /// Numeric value of a column, `None` when empty or not numeric.
    pub fn number(&self, column: &str) -> Option<f64> {
        let cell = match column {
            "trials" => return Some(self.trials as f64),
            "mean_cost" => &self.mean_cost,
            "ci_halfwidth" => &self.ci_halfwidth,
            "exact_cost" => &self.exact_cost,
            "error_rate" => &self.error_rate,
            "entropy_lb" => &self.entropy_lb,
            "ssc_lb" => &self.ssc_lb,
            "sparsity_lb" => &self.sparsity_lb,
            "opt" => &self.opt,
            _ => return None,
        };
        cell.parse().ok()
    }

    fn key(&self) -> (&str, &str) {
        (&self.instance_id, &self.policy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactMode {
    Off,
    /// Enumerate when the star cap allows, otherwise leave the cell empty.
    IfFeasible,
    Required,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    /// Monte Carlo trials; zero skips sampling.
    pub trials: u64,
    pub seed: Option<u64>,
    pub exact: ExactMode,
    pub star_cap: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub instance_id: String,
    pub policy: String,
    pub exact: Option<ExactCost>,
    pub monte_carlo: Option<MonteCarlo>,
    pub bounds: BoundsReport,
}

#[derive(Serialize)]
struct EvalDocument<'a> {
    schema: &'static str,
    instance_id: &'a str,
    policy: &'a str,
    exact_cost: Option<String>,
    error_rate: Option<String>,
    max_cost: Option<usize>,
    per_hypothesis: Option<Vec<String>>,
    monte_carlo: Option<McDocument>,
    ratio_to_opt: Option<String>,
    ratio_to_entropy: Option<String>,
    bounds: &'a BoundsReport,
}

#[derive(Serialize)]
struct McDocument {
    trials: u64,
    mean_cost: String,
    ci_halfwidth: String,
    errors: u64,
}

impl EvalReport {
    /// Exact value when known, else the sample mean.
    pub fn expected_cost(&self) -> Option<f64> {
        match (&self.exact, &self.monte_carlo) {
            (Some(e), _) => Some(ratio_to_f64(&e.expected)),
            (None, Some(mc)) => Some(mc.mean),
            _ => None,
        }
    }

    pub fn error_rate(&self) -> Option<f64> {
        match (&self.exact, &self.monte_carlo) {
            (Some(e), _) => Some(ratio_to_f64(&e.error_rate)),
            (None, Some(mc)) => Some(mc.error_rate()),
            _ => None,
        }
    }

    pub fn ratio_to_opt(&self) -> Option<f64> {
        let opt = self.bounds.opt_adaptive.as_ref()?.value;
        (opt > 0.0).then(|| self.expected_cost().map(|c| c / opt)).flatten()
    }

    pub fn ratio_to_entropy(&self) -> Option<f64> {
        let h = self.bounds.entropy_lb;
        (h > 0.0).then(|| self.expected_cost().map(|c| c / h)).flatten()
    }

    pub fn row(&self) -> ReportRow {
        let b = &self.bounds;
        let opt_f = |v: Option<f64>| v.map(fmt6).unwrap_or_default();
        ReportRow {
            instance_id: self.instance_id.clone(),
            policy: self.policy.clone(),
            trials: self.monte_carlo.as_ref().map_or(0, |mc| mc.trials),
            mean_cost: opt_f(self.monte_carlo.as_ref().map(|mc| mc.mean)),
            ci_halfwidth: opt_f(self.monte_carlo.as_ref().map(|mc| mc.halfwidth)),
            exact_cost: opt_f(self.exact.as_ref().map(|e| ratio_to_f64(&e.expected))),
            error_rate: opt_f(self.error_rate()),
            entropy_lb: fmt6(b.entropy_lb),
            ssc_lb: opt_f(b.ssc_lb.as_ref().map(|v| v.value)),
            sparsity_lb: b.sparsity_lb.map(|v| v.to_string()).unwrap_or_default(),
            opt: opt_f(b.opt_adaptive.as_ref().map(|v| v.value)),
            schema: REPORT_SCHEMA.into(),
        }
    }

    pub fn to_json(&self) -> String {
        let fmt = |r: &BigRational| format_rational(r);
        let doc = EvalDocument {
            schema: REPORT_SCHEMA,
            instance_id: &self.instance_id,
            policy: &self.policy,
            exact_cost: self.exact.as_ref().map(|e| fmt(&e.expected)),
            error_rate: self.exact.as_ref().map(|e| fmt(&e.error_rate)),
            max_cost: self.exact.as_ref().map(|e| e.max_cost),
            per_hypothesis: self.exact.as_ref().map(|e| e.per_hypothesis.iter().map(fmt).collect()),
            monte_carlo: self.monte_carlo.as_ref().map(|mc| McDocument {
                trials: mc.trials,
                mean_cost: fmt6(mc.mean),
                ci_halfwidth: fmt6(mc.halfwidth),
                errors: mc.errors,
            }),
            ratio_to_opt: self.ratio_to_opt().map(fmt6),
            ratio_to_entropy: self.ratio_to_entropy().map(fmt6),
            bounds: &self.bounds,
        };
        serde_json::to_string_pretty(&doc).expect("reports always serialize")
    }
}

pub fn evaluate(
    instance_id: &str,
    table: &OdtnInstance,
    strategy: &dyn Strategy,
    cfg: &EvalConfig,
    bounds: &BoundsReport,
) -> Result<EvalReport> {
    let exact = match cfg.exact {
        ExactMode::Off => None,
        ExactMode::Required => Some(exact_strategy_cost(strategy, table, cfg.star_cap)?),
        ExactMode::IfFeasible => match exact_strategy_cost(strategy, table, cfg.star_cap) {
            Ok(e) => Some(e),
            Err(Error::Infeasible { .. }) => None,
            Err(e) => return Err(e),
        },
    };
    let monte_carlo = if cfg.trials > 0 {
        let seed = cfg.seed.ok_or_else(|| Error::Domain("Monte Carlo trials need a seed".into()))?;
        Some(monte_carlo_cost(strategy, table, cfg.trials, seed)?)
    } else {
        None
    };
    Ok(EvalReport {
        instance_id: instance_id.into(),
        policy: strategy.name(),
        exact,
        monte_carlo,
        bounds: bounds.clone(),
    })
}

/// Rows in canonical order: by instance, then policy.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| a.key().cmp(&b.key()));
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in &sorted {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ReportRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::Parse(format!("unexpected report columns: {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{compute_bounds, Caps};
    use crate::harness::algo::{build_strategy, AlgoOptions, Algorithm};

    #[test]
    fn six_decimals() {
        assert_eq!(fmt6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt6(-0.0), "0.000000");
        assert_eq!(fmt6(2.0), "2.000000");
    }

    #[test]
    fn csv_round_trip() {
        let table = OdtnInstance::from_rows(&["+-*", "*+-", "-*+", "++-"]).unwrap();
        let bounds = compute_bounds(&table, &Caps::default()).unwrap();
        let cfg = EvalConfig { trials: 200, seed: Some(3), exact: ExactMode::IfFeasible, star_cap: 16 };
        let mut rows = Vec::new();
        for alg in [Algorithm::AdaptiveR, Algorithm::AdaptiveC] {
            let s = build_strategy(alg, &table, &AlgoOptions::default()).unwrap();
            let report = evaluate("tiny", &table, s.as_ref(), &cfg, &bounds).unwrap();
            assert!(report.ratio_to_opt().unwrap() >= 1.0 - 1e-12);
            rows.push(report.row());
        }
        let text = csv_string(&rows);
        assert!(text.starts_with("instance_id,policy,trials,mean_cost"));
        let back = read_csv(text.as_bytes()).unwrap();
        assert_eq!(back[0].policy, "adaptive-c");
        assert_eq!(csv_string(&back), text);
    }
}
