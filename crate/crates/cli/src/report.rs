//! Scenario reports: named scalars plus pass/fail checks.
//!
//! A report accumulates everything a scenario measured. Checks come in two
//! directions — a residual that must stay below its bound, and a decay or
//! separation ratio that must stay above it. The JSON rendering is one flat,
//! alphabetically ordered map: each scalar by name, each check as
//! `<name>_passed`, and an overall `all_passed`, so downstream tooling never
//! digs through nesting.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

/// One verified bound.
#[derive(Debug, Clone)]
pub struct Check {
    /// What was measured.
    pub name: String,
    /// The measured value.
    pub measured: f64,
    /// The configured bound.
    pub bound: f64,
    /// True when the measurement must stay at or below the bound; false
    /// when it must stay at or above it.
    pub at_most: bool,
    /// Whether the bound held.
    pub passed: bool,
}

/// Everything one scenario measured.
#[derive(Debug, Clone)]
pub struct Report {
    name: String,
    scalars: BTreeMap<String, f64>,
    checks: Vec<Check>,
}

impl Report {
    /// Starts an empty report for a named scenario.
    pub fn new(name: impl Into<String>) -> Self {
        Report {
            name: name.into(),
            scalars: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    /// The scenario name.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Records a named scalar.
    pub fn scalar(&mut self, name: impl Into<String>, value: f64) {
        self.scalars.insert(name.into(), value);
    }

    /// Records a check that must satisfy `measured <= bound`. The measured
    /// value is also stored as a scalar under the check's name.
    pub fn check_at_most(&mut self, name: impl Into<String>, measured: f64, bound: f64) -> bool {
        self.push_check(name.into(), measured, bound, true)
    }

    /// Records a check that must satisfy `measured >= bound`.
    pub fn check_at_least(&mut self, name: impl Into<String>, measured: f64, bound: f64) -> bool {
        self.push_check(name.into(), measured, bound, false)
    }

    fn push_check(&mut self, name: String, measured: f64, bound: f64, at_most: bool) -> bool {
        let passed = if at_most {
            measured <= bound
        } else {
            measured >= bound
        };
        // A non-finite measurement can never certify a bound.
        let passed = passed && measured.is_finite();
        self.scalars.insert(name.clone(), measured);
        self.checks.push(Check {
            name,
            measured,
            bound,
            at_most,
            passed,
        });
        passed
    }

    /// The recorded checks, in insertion order.
    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    /// The recorded scalars.
    pub fn scalars(&self) -> &BTreeMap<String, f64> {
        &self.scalars
    }

    /// True when every check passed (a report with no checks passes).
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Renders the flat JSON summary.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (name, value) in &self.scalars {
            map.insert(name.clone(), json_number(*value));
        }
        for check in &self.checks {
            map.insert(format!("{}_passed", check.name), Value::Bool(check.passed));
        }
        map.insert("all_passed".to_string(), Value::Bool(self.all_passed()));
        // serde_json's map preserves insertion order; rebuild sorted so the
        // rendering is stable regardless of how the report was assembled.
        let mut sorted = Map::new();
        let mut keys: Vec<&String> = map.keys().collect();
        keys.sort();
        for key in keys {
            sorted.insert(key.clone(), map[key].clone());
        }
        Value::Object(sorted)
    }

    /// One human line per check, then the verdict.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            let relation = if check.at_most { "<=" } else { ">=" };
            let verdict = if check.passed { "ok" } else { "FAIL" };
            out.push_str(&format!(
                "check {}: {:.6e} {} {:.6e} .. {}\n",
                check.name, check.measured, relation, check.bound, verdict
            ));
        }
        out.push_str(&format!(
            "{}: {}\n",
            self.name,
            if self.all_passed() {
                "all checks passed"
            } else {
                "CHECKS FAILED"
            }
        ));
        out
    }
}

/// Serializes a float, keeping non-finite values representable.
fn json_number(value: f64) -> Value {
    serde_json::Number::from_f64(value)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(format!("{value}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_follow_the_direction_of_the_bound() {
        let mut report = Report::new("demo");
        assert!(report.check_at_most("residual", 1e-12, 1e-10));
        assert!(report.check_at_least("decay", 3.9, 2.5));
        assert!(!report.check_at_most("overflow", 2.0, 1.0));
        assert!(!report.all_passed());
    }

    #[test]
    fn non_finite_measurements_never_pass() {
        let mut report = Report::new("demo");
        assert!(!report.check_at_most("nan", f64::NAN, 1.0));
        assert!(!report.check_at_least("inf", f64::NEG_INFINITY, 0.0));
    }

    #[test]
    fn json_is_flat_sorted_and_complete() {
        let mut report = Report::new("demo");
        report.scalar("zeta", 1.5);
        report.check_at_most("alpha", 0.5, 1.0);
        let value = report.to_json();
        let object = value.as_object().unwrap();
        let keys: Vec<&String> = object.keys().collect();
        assert_eq!(keys, ["all_passed", "alpha", "alpha_passed", "zeta"]);
        assert_eq!(object["alpha_passed"], Value::Bool(true));
        assert_eq!(object["all_passed"], Value::Bool(true));
    }

    #[test]
    fn empty_reports_pass_vacuously() {
        let report = Report::new("noop");
        assert!(report.all_passed());
        assert_eq!(report.to_json()["all_passed"], Value::Bool(true));
    }
}
