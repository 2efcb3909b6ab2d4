//! Check results in machine- and human-readable form. A report's summary
//! counts executed checks (`total = pass + fail`); skips are listed apart.

use serde_json::{json, Value};
use std::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

impl Outcome {
    fn label(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    /// Observed-vs-expected diff on failure, or the reason for a skip.
    pub detail: Option<String>,
}

#[derive(Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn pass(&mut self, name: impl Into<String>) {
        self.checks.push(Check { name: name.into(), outcome: Outcome::Pass, detail: None });
    }

    pub fn fail(&mut self, name: impl Into<String>, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            outcome: Outcome::Fail,
            detail: Some(detail.into()),
        });
    }

    pub fn skip(&mut self, name: impl Into<String>, reason: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            outcome: Outcome::Skip,
            detail: Some(reason.into()),
        });
    }

    /// Record `outcome`: pass on Ok, fail with the error text on Err.
    pub fn check(&mut self, name: impl Into<String>, outcome: Result<(), String>) {
        match outcome {
            Ok(()) => self.pass(name),
            Err(detail) => self.fail(name, detail),
        }
    }

    fn count(&self, outcome: Outcome) -> usize {
        self.checks.iter().filter(|c| c.outcome == outcome).count()
    }

    pub fn passed(&self) -> usize {
        self.count(Outcome::Pass)
    }

    pub fn failed(&self) -> usize {
        self.count(Outcome::Fail)
    }

    pub fn skipped(&self) -> usize {
        self.count(Outcome::Skip)
    }

    pub fn is_success(&self) -> bool {
        self.failed() == 0
    }

    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                let mut entry = json!({"name": c.name, "outcome": c.outcome.label()});
                if let Some(detail) = &c.detail {
                    entry["detail"] = json!(detail);
                }
                entry
            })
            .collect();
        json!({
            "checks": checks,
            "summary": {
                "total": self.passed() + self.failed(),
                "pass": self.passed(),
                "fail": self.failed(),
                "skip": self.skipped(),
            }
        })
    }

    pub fn write_human(&self, out: &mut impl io::Write) -> io::Result<()> {
        for c in &self.checks {
            match (c.outcome, &c.detail) {
                (Outcome::Pass, _) => writeln!(out, "PASS  {}", c.name)?,
                (Outcome::Fail, Some(d)) => writeln!(out, "FAIL  {}: {}", c.name, d)?,
                (Outcome::Fail, None) => writeln!(out, "FAIL  {}", c.name)?,
                (Outcome::Skip, Some(d)) => writeln!(out, "SKIP  {}: {}", c.name, d)?,
                (Outcome::Skip, None) => writeln!(out, "SKIP  {}", c.name)?,
            }
        }
        writeln!(
            out,
            "{} passed, {} failed, {} skipped",
            self.passed(),
            self.failed(),
            self.skipped()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_counts_executed_checks_only() {
        let mut r = Report::default();
        r.pass("a");
        r.fail("b", "boom");
        r.skip("c", "not announced");
        assert_eq!(r.passed(), 1);
        assert_eq!(r.failed(), 1);
        assert_eq!(r.skipped(), 1);
        assert!(!r.is_success());
        let j = r.to_json();
        assert_eq!(j["summary"]["total"], 2);
        assert_eq!(j["checks"][2]["outcome"], "skip");
    }

    #[test]
    fn human_output_lists_every_check() {
        let mut r = Report::default();
        r.pass("alpha");
        r.skip("beta", "feature not announced");
        let mut buf = Vec::new();
        r.write_human(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("PASS  alpha"));
        assert!(text.contains("SKIP  beta: feature not announced"));
        assert!(text.contains("1 passed, 0 failed, 1 skipped"));
    }
}
