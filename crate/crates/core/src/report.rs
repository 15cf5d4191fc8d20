//! Verification records emitted by the suites.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// The computation contradicts a claim as stated; recorded without failing the run.
    PaperDiscrepancy,
}

/// Where the expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedSource {
    /// Exact value for the model space.
    ClosedForm,
    /// A second computation by an unrelated method.
    IndependentOracle,
    /// Both sides of an identity are computed; `expected` is the right-hand side.
    Identity,
    /// An inequality; `expected` is the bound.
    Bound,
    /// Elementary consequence of the definitions.
    Definition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `|computed − expected| ≤ tol`
    Equal,
    /// `computed ≤ expected + tol`
    AtMost,
    /// `computed ≥ expected − tol`
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Tolerance {
    Abs(f64),
    /// Relative to `max(|expected|, tiny)`.
    Rel(f64),
}

impl Tolerance {
    pub fn allowance(&self, expected: f64) -> f64 {
        match *self {
            Tolerance::Abs(t) => t,
            Tolerance::Rel(t) => t * expected.abs().max(f64::MIN_POSITIVE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// The statement being checked.
    pub reference: String,
    pub computed: f64,
    pub expected: f64,
    pub expected_source: ExpectedSource,
    pub comparison: Comparison,
    pub tolerance: Tolerance,
    pub status: Status,
    pub quantities: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
    pub wall_time_ms: f64,
}

impl CheckReport {
    pub fn new(
        name: impl Into<String>,
        reference: impl Into<String>,
        computed: f64,
        expected: f64,
        source: ExpectedSource,
        comparison: Comparison,
        tolerance: Tolerance,
    ) -> Self {
        let mut r = Self {
            name: name.into(),
            reference: reference.into(),
            computed,
            expected,
            expected_source: source,
            comparison,
            tolerance,
            status: Status::Fail,
            quantities: BTreeMap::new(),
            note: None,
            wall_time_ms: 0.0,
        };
        r.status = if r.within_tolerance() { Status::Pass } else { Status::Fail };
        r
    }

    pub fn equal(name: impl Into<String>, reference: impl Into<String>, computed: f64, expected: f64, source: ExpectedSource, tolerance: Tolerance) -> Self {
        Self::new(name, reference, computed, expected, source, Comparison::Equal, tolerance)
    }

    pub fn at_most(name: impl Into<String>, reference: impl Into<String>, computed: f64, bound: f64, tolerance: Tolerance) -> Self {
        Self::new(name, reference, computed, bound, ExpectedSource::Bound, Comparison::AtMost, tolerance)
    }

    pub fn at_least(name: impl Into<String>, reference: impl Into<String>, computed: f64, bound: f64, tolerance: Tolerance) -> Self {
        Self::new(name, reference, computed, bound, ExpectedSource::Bound, Comparison::AtLeast, tolerance)
    }

    /// A check that could not be evaluated.
    pub fn errored(name: impl Into<String>, reference: impl Into<String>, err: impl std::fmt::Display) -> Self {
        let mut r = Self::new(name, reference, f64::NAN, f64::NAN, ExpectedSource::Definition, Comparison::Equal, Tolerance::Abs(0.0));
        r.note = Some(format!("error: {err}"));
        r
    }

    pub fn within_tolerance(&self) -> bool {
        let tol = self.tolerance.allowance(self.expected);
        let (c, e) = (self.computed, self.expected);
        match self.comparison {
            Comparison::Equal => (c - e).abs() <= tol,
            Comparison::AtMost => c <= e + tol,
            Comparison::AtLeast => c >= e - tol,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.quantities.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Marks a check whose outcome contradicts the statement as written. The
    /// numerical comparison still decides: a discrepancy that fails its own
    /// tolerance is a failure.
    pub fn as_discrepancy(mut self) -> Self {
        if self.status == Status::Pass {
            self.status = Status::PaperDiscrepancy;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    /// The report with timing removed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_ms: 0.0,
            ..self.clone()
        }
    }
}

/// Runs `f` and stamps the elapsed time on the report it returns.
pub fn timed<F: FnOnce() -> CheckReport>(f: F) -> CheckReport {
    let start = Instant::now();
    let mut r = f();
    r.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    r
}

/// Exit code for a finished run: 0 if nothing failed, 1 otherwise.
pub fn exit_code(reports: &[CheckReport]) -> i32 {
    if reports.iter().all(CheckReport::passed) {
        0
    } else {
        1
    }
}
