//! JSON instance documents.
//!
//! ```json
//! {"outcomes": ["+", "-"], "prior": ["0.5", "0.5"],
//!  "tests": [{"name": "T0", "row": ["+", "-"]}]}
//! ```
//!
//! Prior entries are decimal (`"0.25"`) or fraction (`"1/3"`) strings.

use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ratio_to_f64, Alphabet, Issue, OdtnInstance, ValidationReport, STAR};

pub const INSTANCE_SCHEMA: &str = "odtn.instance/1";

/// Tolerance on `|Σ prior - 1|` accepted when reading documents.
pub const PRIOR_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub outcomes: Vec<String>,
    pub prior: Vec<String>,
    pub tests: Vec<TestDocument>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestDocument {
    pub name: String,
    pub row: Vec<String>,
}

impl InstanceDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance documents always serialize")
    }

    pub fn from_instance(inst: &OdtnInstance) -> Self {
        let alphabet = inst.alphabet();
        InstanceDocument {
            schema: Some(INSTANCE_SCHEMA.to_string()),
            outcomes: alphabet.symbols().to_vec(),
            prior: inst.prior().iter().map(format_rational).collect(),
            tests: (0..inst.n())
                .map(|t| TestDocument {
                    name: inst.test_name(t).to_string(),
                    row: inst.row(t).iter().map(|&r| alphabet.response_label(r).to_string()).collect(),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if let Err(e) = Alphabet::new(self.outcomes.iter().cloned()) {
            report.issues.push(Issue::Alphabet(e.to_string()));
        }
        let m = self.prior.len();
        if m == 0 {
            report.issues.push(Issue::NoHypotheses);
        }
        for (t, test) in self.tests.iter().enumerate() {
            if test.row.len() != m {
                report.issues.push(Issue::RowLength { test: t, expected: m, found: test.row.len() });
            }
            for (i, label) in test.row.iter().enumerate() {
                if label != STAR && !self.outcomes.contains(label) {
                    report.issues.push(Issue::UnknownSymbol { test: t, hypothesis: i, symbol: label.clone() });
                }
            }
        }
        let mut total = BigRational::zero();
        let mut parsed_all = true;
        for (i, text) in self.prior.iter().enumerate() {
            match parse_rational(text) {
                Ok(p) => {
                    if p.is_negative() {
                        report.issues.push(Issue::NegativePrior { hypothesis: i });
                    }
                    total += p;
                }
                Err(_) => {
                    parsed_all = false;
                    report.issues.push(Issue::BadPrior { hypothesis: i, text: text.clone() });
                }
            }
        }
        if parsed_all && m > 0 {
            let sum = ratio_to_f64(&total);
            if (sum - 1.0).abs() > PRIOR_TOLERANCE {
                report.issues.push(Issue::PriorSum { sum });
            }
        }
        report
    }

    /// Validates and converts; a prior within tolerance of one is
    /// renormalized so that it sums to exactly one.
    pub fn to_instance(&self) -> Result<OdtnInstance> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(Error::InvalidInstance(report));
        }
        let alphabet = Alphabet::new(self.outcomes.iter().cloned())?;
        let mut prior: Vec<BigRational> = self.prior.iter().map(|p| parse_rational(p)).collect::<Result<_>>()?;
        let total: BigRational = prior.iter().sum();
        if total.is_zero() {
            return Err(Error::Domain("prior has zero total mass".into()));
        }
        if !total.is_one() {
            for p in &mut prior {
                *p = &*p / &total;
            }
        }
        let tests = self
            .tests
            .iter()
            .map(|t| {
                let row = t
                    .row
                    .iter()
                    .map(|l| alphabet.parse_response(l).expect("validated symbol"))
                    .collect();
                (t.name.clone(), row)
            })
            .collect();
        OdtnInstance::new(alphabet, tests, prior)
    }
}

pub fn validate_instance(doc: &InstanceDocument) -> ValidationReport {
    doc.validate()
}

pub fn read_instance(path: &Path) -> Result<OdtnInstance> {
    let text = std::fs::read_to_string(path)?;
    InstanceDocument::from_json(&text)?.to_instance()
}

pub fn write_instance(path: &Path, inst: &OdtnInstance) -> Result<()> {
    let mut text = InstanceDocument::from_instance(inst).to_json();
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Parses `"3"`, `"-0.125"`, `"1/3"` or `"2.5e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(BigInt::from_str(&all_digits).map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// Terminating decimals print as decimals, everything else as `p/q`.
pub fn format_rational(value: &BigRational) -> String {
    let den = value.denom().clone();
    let mut rest = den.clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0usize;
    let mut fives = 0usize;
    while rest.is_even() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", value.numer(), den);
    }
    let places = twos.max(fives);
    if places == 0 {
        return value.numer().to_string();
    }
    let scaled = value * BigRational::from_integer(num_traits::pow(BigInt::from(10), places));
    let digits = scaled.to_integer().abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - places);
    let sign = if value.is_negative() { "-" } else { "" };
    format!("{sign}{int_part}.{frac_part}")
}
