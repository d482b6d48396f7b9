//! Named verification checks with statistical verdicts.
//!
//! A check evaluates one or more cases. Each case compares a left-hand
//! estimate with a right-hand estimate (or exact value) under an
//! [`Assertion`]. Report-only cases never fail.

mod checks;

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::exec::DEFAULT_SAMPLES;

pub use checks::{registry, CheckDef, CRITERIA};

/// Seed used by the acceptance suite and by `verify` when none is given.
pub const DEFAULT_SEED: u64 = 42;

/// Width of equality bands and strict margins, in standard errors.
pub const BAND_SE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assertion {
    /// `|lhs - rhs| ≤ band · SE`.
    Equal { band: f64 },
    /// `rhs - lhs > min · SE`.
    StrictlyBelow { min: f64 },
    /// `lhs - rhs ≤ slack · SE`.
    AtMost { slack: f64 },
    /// `|lhs - rhs| > min · SE`.
    Drift { min: f64 },
    /// Bit-identical means and standard errors.
    Identical,
    /// `|lhs - rhs| ≤ tol`.
    WithinAbs { tol: f64 },
    ReportOnly,
}

impl Assertion {
    pub fn equal() -> Self {
        Assertion::Equal { band: BAND_SE }
    }

    pub fn below() -> Self {
        Assertion::StrictlyBelow { min: BAND_SE }
    }

    pub fn at_most() -> Self {
        Assertion::AtMost { slack: BAND_SE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Report,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Report => "REPORT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub label: String,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub assertion: Assertion,
    /// `(rhs - lhs) / SE` with the combined standard error; zero for
    /// deterministic comparisons.
    pub margin_se: f64,
    pub verdict: Verdict,
}

impl CaseReport {
    pub fn new(label: impl Into<String>, lhs: Estimate, rhs: Estimate, assertion: Assertion) -> Self {
        let se = lhs.combined_se(&rhs);
        let diff = rhs.mean - lhs.mean;
        let margin_se = match assertion {
            Assertion::Identical | Assertion::WithinAbs { .. } => 0.0,
            _ if se > 0.0 => diff / se,
            _ => 0.0,
        };
        let ok = match assertion {
            Assertion::Equal { band } => diff.abs() <= band * se,
            Assertion::StrictlyBelow { min } => diff > min * se,
            Assertion::AtMost { slack } => -diff <= slack * se,
            Assertion::Drift { min } => diff.abs() > min * se,
            Assertion::Identical => {
                lhs.mean.to_bits() == rhs.mean.to_bits() && lhs.std_error.to_bits() == rhs.std_error.to_bits()
            }
            Assertion::WithinAbs { tol } => diff.abs() <= tol,
            Assertion::ReportOnly => true,
        };
        let verdict = match (assertion, ok) {
            (Assertion::ReportOnly, _) => Verdict::Report,
            (_, true) => Verdict::Pass,
            (_, false) => Verdict::Fail,
        };
        CaseReport {
            label: label.into(),
            lhs,
            rhs,
            assertion,
            margin_se,
            verdict,
        }
    }

    pub fn exact(label: impl Into<String>, lhs: Estimate, rhs: f64, assertion: Assertion) -> Self {
        CaseReport::new(label, lhs, Estimate::exact(rhs), assertion)
    }
}

/// Which check to run, and with what budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub name: String,
    pub samples: usize,
    pub seed: u64,
}

impl CheckSpec {
    pub fn new(name: impl Into<String>) -> Self {
        CheckSpec {
            name: name.into(),
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub criterion: u8,
    pub description: String,
    pub samples: usize,
    pub seed: u64,
    pub cases: Vec<CaseReport>,
    pub verdict: Verdict,
    #[serde(skip)]
    pub runtime: Duration,
}

impl CheckReport {
    /// Smallest signed margin over asserted cases, in SE units.
    pub fn worst_margin(&self) -> Option<f64> {
        self.cases
            .iter()
            .filter(|c| c.verdict != Verdict::Report)
            .map(|c| c.margin_se)
            .min_by(|a, b| a.total_cmp(b))
    }
}

fn overall(cases: &[CaseReport]) -> Verdict {
    if cases.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if cases.iter().all(|c| c.verdict == Verdict::Report) {
        Verdict::Report
    } else {
        Verdict::Pass
    }
}

pub fn find_check(name: &str) -> Option<&'static CheckDef> {
    registry().iter().find(|c| c.name == name)
}

pub fn run_check(job: &CheckSpec) -> Result<CheckReport> {
    let def = find_check(&job.name).ok_or_else(|| Error::arg(format!("unknown check '{}'", job.name)))?;
    if job.samples < 2 {
        return Err(Error::arg("checks need at least 2 samples"));
    }
    let start = Instant::now();
    let cases = (def.run)(job).map_err(|e| Error::Check {
        name: def.name.to_string(),
        source: Box::new(e),
    })?;
    Ok(CheckReport {
        name: def.name.to_string(),
        criterion: def.criterion,
        description: def.description.to_string(),
        samples: job.samples,
        seed: job.seed,
        verdict: overall(&cases),
        cases,
        runtime: start.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub reported: usize,
}

impl Summary {
    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failed > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckReport>,
    pub summary: Summary,
}

/// Resolve `"all"` or a list of names into registry order. Unknown names
/// are a configuration error.
pub fn select(names: &[String]) -> Result<Vec<&'static CheckDef>> {
    if names.iter().any(|n| n == "all") {
        return Ok(registry().iter().collect());
    }
    for n in names {
        if find_check(n).is_none() {
            return Err(Error::arg(format!("unknown check '{n}'")));
        }
    }
    Ok(registry().iter().filter(|c| names.iter().any(|n| n == c.name)).collect())
}

/// Run the selected checks in registry order with one seed and budget.
pub fn run_suite(names: &[String], seed: u64, samples: Option<usize>) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let mut summary = Summary::default();
    for def in select(names)? {
        let job = CheckSpec::new(def.name)
            .with_seed(seed)
            .with_samples(samples.unwrap_or(DEFAULT_SAMPLES));
        let report = run_check(&job)?;
        log::info!("{} {} in {:.1?}", report.verdict.label(), report.name, report.runtime);
        match report.verdict {
            Verdict::Pass => summary.passed += 1,
            Verdict::Fail => summary.failed += 1,
            Verdict::Report => summary.reported += 1,
        }
        checks.push(report);
    }
    Ok(SuiteReport { checks, summary })
}

fn fmt_est(e: &Estimate) -> String {
    if e.std_error == 0.0 && e.samples == 0 {
        format!("{:.8} (exact)", e.mean)
    } else {
        format!("{:.8} ± {:.2e}", e.mean, e.std_error)
    }
}

impl CheckReport {
    pub fn text(&self) -> String {
        let mut out = format!(
            "[{}] {} (criterion {}, samples {}, seed {})\n      {}\n",
            self.verdict.label(),
            self.name,
            self.criterion,
            self.samples,
            self.seed,
            self.description
        );
        for c in &self.cases {
            out.push_str(&format!(
                "    {:<6} {}: lhs {}  rhs {}  margin {:+.2} SE\n",
                c.verdict.label(),
                c.label,
                fmt_est(&c.lhs),
                fmt_est(&c.rhs),
                c.margin_se
            ));
        }
        out
    }
}

impl SuiteReport {
    pub fn text(&self) -> String {
        let mut out: String = self.checks.iter().map(|c| c.text()).collect();
        out.push_str(&format!(
            "summary: {} passed, {} failed, {} report-only\n",
            self.summary.passed, self.summary.failed, self.summary.reported
        ));
        out
    }

    pub fn json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.checks)?)
    }

    /// One CSV row per case.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "check",
            "criterion",
            "case",
            "assertion",
            "lhs_mean",
            "lhs_std_error",
            "rhs_mean",
            "rhs_std_error",
            "margin_se",
            "verdict",
            "samples",
            "seed",
        ])?;
        for c in &self.checks {
            for case in &c.cases {
                let kind = serde_json::to_value(case.assertion)?;
                w.write_record([
                    c.name.clone(),
                    c.criterion.to_string(),
                    case.label.clone(),
                    kind["kind"].as_str().unwrap_or_default().to_string(),
                    format!("{:e}", case.lhs.mean),
                    format!("{:e}", case.lhs.std_error),
                    format!("{:e}", case.rhs.mean),
                    format!("{:e}", case.rhs.std_error),
                    format!("{:.4}", case.margin_se),
                    case.verdict.label().to_string(),
                    c.samples.to_string(),
                    c.seed.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
