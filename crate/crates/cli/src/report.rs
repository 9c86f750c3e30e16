use serde::Serialize;

use crate::spec::ExperimentSpec;

/// A pass/fail judgement with its margin; `slack ≥ 0` exactly when `passed`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
}

impl Verdict {
    /// `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::from_slack(name, value, bound, bound - value)
    }

    /// `value ≥ bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::from_slack(name, value, bound, value - bound)
    }

    /// `|value| ≤ bound`.
    pub fn abs_at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::from_slack(name, value, bound, bound - value.abs())
    }

    /// A yes/no property; value 1 when it holds.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self::from_slack(name, v, 1.0, v - 1.0)
    }

    fn from_slack(name: impl Into<String>, value: f64, bound: f64, slack: f64) -> Self {
        Verdict {
            name: name.into(),
            passed: slack >= 0.0,
            value,
            bound,
            slack,
        }
    }
}

/// Contents of `report.json`.
#[derive(Debug, Serialize)]
pub struct ExperimentReport<'a> {
    pub name: &'a str,
    pub kind: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub spec: &'a ExperimentSpec,
    pub outputs: Vec<String>,
    pub verdicts: &'a [Verdict],
}

/// `git describe`-style version of this build.
pub const VERSION: &str = env!("HARRIS_VERSION");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_sign_matches_outcome() {
        assert!(Verdict::at_most("a", 1.0, 1.1).passed);
        assert!(!Verdict::at_most("a", 1.2, 1.1).passed);
        assert!(Verdict::at_least("b", 2.0, 2.0).passed);
        let v = Verdict::abs_at_most("c", -2.5, 2.0);
        assert!(!v.passed && v.slack == -0.5);
        assert_eq!(Verdict::holds("d", false).slack, -1.0);
    }
}
