//! Structured pass/fail records for checked identities.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::tensor::Tolerance;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A negative check whose predicted failure was observed.
    ExpectedFailure,
    /// Not evaluated because an upstream hypothesis failed.
    SkippedHypothesis,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::ExpectedFailure => "XFAIL",
            Verdict::SkippedHypothesis => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Plain statement of the identity being checked.
    pub claim: String,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, f64>,
}

impl CheckRecord {
    /// Residual-based record: passes when `residual <= tolerance`.
    pub fn check(name: impl Into<String>, claim: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let verdict = if residual <= tolerance { Verdict::Pass } else { Verdict::Fail };
        Self {
            name: name.into(),
            claim: claim.into(),
            residual,
            tolerance,
            verdict,
            seed: None,
            parameters: BTreeMap::new(),
        }
    }

    /// Negative check: the residual is predicted to exceed `tolerance`.
    /// Observing that gives `ExpectedFailure`; a vanishing residual is a `Fail`.
    pub fn expect_failure(
        name: impl Into<String>,
        claim: impl Into<String>,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        let mut r = Self::check(name, claim, residual, tolerance);
        r.verdict = if residual > tolerance { Verdict::ExpectedFailure } else { Verdict::Fail };
        r
    }

    pub fn skipped(name: impl Into<String>, claim: impl Into<String>) -> Self {
        let mut r = Self::check(name, claim, 0.0, 0.0);
        r.verdict = Verdict::SkippedHypothesis;
        r
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub title: String,
    pub seed: Option<u64>,
    pub tolerance: Tolerance,
    pub records: Vec<CheckRecord>,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    pub fn new(title: impl Into<String>, tolerance: Tolerance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            title: title.into(),
            seed: None,
            tolerance,
            records: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.records.extend(other.records);
        self.warnings.extend(other.warnings);
    }

    /// True when no record failed; expected failures and skips do not count against it.
    pub fn passed(&self) -> bool {
        self.records.iter().all(CheckRecord::passed)
    }

    pub fn record(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.records.iter().filter(|r| r.verdict == verdict).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.title);
        let _ = writeln!(out, "schema_version: {}", self.schema_version);
        match self.seed {
            Some(s) => {
                let _ = writeln!(out, "seed: {s}");
            }
            None => {
                let _ = writeln!(out, "seed: none");
            }
        }
        let _ = writeln!(
            out,
            "tolerance: absolute {:e}, relative {:e}",
            self.tolerance.absolute, self.tolerance.relative
        );
        for r in &self.records {
            let _ = write!(
                out,
                "{}: {}  (residual {:.3e}, tol {:.3e})",
                r.name,
                r.verdict.label(),
                r.residual,
                r.tolerance
            );
            if !r.parameters.is_empty() {
                let params: Vec<String> =
                    r.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let _ = write!(out, " [{}]", params.join(", "));
            }
            if let Some(s) = r.seed {
                let _ = write!(out, " seed={s}");
            }
            let _ = writeln!(out, "  -- {}", r.claim);
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let _ = writeln!(
            out,
            "overall: {} ({} pass, {} fail, {} xfail, {} skipped)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.count(Verdict::Pass),
            self.count(Verdict::Fail),
            self.count(Verdict::ExpectedFailure),
            self.count(Verdict::SkippedHypothesis)
        );
        out
    }
}
