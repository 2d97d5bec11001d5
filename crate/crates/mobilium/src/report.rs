//! Pass/fail reports for structural identity checks.
//!
//! A check never aborts on a violated identity; it records every violation
//! with its matrix position and a human-readable detail, and the report as a
//! whole is `pass` exactly when no violation was recorded.

use serde::Serialize;

/// One violated identity at a matrix position.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    /// Row index of the offending entry.
    pub i: usize,
    /// Column index of the offending entry (row-indexed checks use 0).
    pub j: usize,
    /// What was expected and what was found.
    pub detail: String,
}

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    /// Name of the check.
    pub check: String,
    /// `"pass"` or `"fail"`.
    pub status: String,
    /// Every violation found, empty on pass.
    pub violations: Vec<Violation>,
}

impl Report {
    /// A passing report for a named check.
    pub fn new(check: &str) -> Report {
        Report {
            check: check.to_string(),
            status: "pass".to_string(),
            violations: Vec::new(),
        }
    }

    /// Records a violation and flips the status to `fail`.
    pub fn violation(&mut self, i: usize, j: usize, detail: impl Into<String>) {
        self.status = "fail".to_string();
        self.violations.push(Violation { i, j, detail: detail.into() });
    }

    /// Whether the check passed.
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    /// One-line summary, suitable for terminal output.
    pub fn summary(&self) -> String {
        if self.is_pass() {
            format!("{}: pass", self.check)
        } else {
            format!("{}: fail ({} violations)", self.check, self.violations.len())
        }
    }

    /// Panics with all violations listed unless the check passed.
    pub fn assert_pass(&self) {
        if !self.is_pass() {
            let mut msg = format!("{} failed:\n", self.check);
            for v in &self.violations {
                msg.push_str(&format!("  ({}, {}): {}\n", v.i, v.j, v.detail));
            }
            panic!("{msg}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_tracks_status() {
        let mut r = Report::new("example");
        assert!(r.is_pass());
        assert_eq!(r.summary(), "example: pass");
        r.violation(3, 4, "entry differs");
        assert!(!r.is_pass());
        assert_eq!(r.status, "fail");
        assert_eq!(r.summary(), "example: fail (1 violations)");
    }

    #[test]
    fn report_serializes_with_schema_fields() {
        let mut r = Report::new("example");
        r.violation(1, 2, "bad");
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["check"], "example");
        assert_eq!(json["status"], "fail");
        assert_eq!(json["violations"][0]["i"], 1);
        assert_eq!(json["violations"][0]["j"], 2);
        assert_eq!(json["violations"][0]["detail"], "bad");
    }
}
