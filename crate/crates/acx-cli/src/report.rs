//! Reports: per-check records plus a provenance block, serialized as JSON.

use serde::Serialize;
use serde_json::Value;

/// One pass/fail record. `pass` depends only on `value` and `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// `"<="`, `">="`, `"<"`, `">"` or `"=="`.
    pub relation: String,
    pub pass: bool,
}

impl Check {
    fn cmp(name: &str, value: f64, relation: &str, threshold: f64) -> Self {
        let pass = match relation {
            "<=" => value <= threshold,
            ">=" => value >= threshold,
            "<" => value < threshold,
            ">" => value > threshold,
            _ => value == threshold,
        };
        Check { name: name.into(), value: num(value), threshold: Some(threshold), relation: relation.into(), pass }
    }

    pub fn le(name: &str, value: f64, threshold: f64) -> Self {
        Self::cmp(name, value, "<=", threshold)
    }

    pub fn ge(name: &str, value: f64, threshold: f64) -> Self {
        Self::cmp(name, value, ">=", threshold)
    }

    pub fn gt(name: &str, value: f64, threshold: f64) -> Self {
        Self::cmp(name, value, ">", threshold)
    }

    pub fn lt(name: &str, value: f64, threshold: f64) -> Self {
        Self::cmp(name, value, "<", threshold)
    }

    pub fn eq(name: &str, value: f64, expected: f64) -> Self {
        Self::cmp(name, value, "==", expected)
    }

    pub fn flag(name: &str, value: bool) -> Self {
        Check { name: name.into(), value: Value::Bool(value), threshold: None, relation: "==".into(), pass: value }
    }
}

/// JSON number, with non-finite values spelled as strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else if x.is_nan() {
        Value::String("NaN".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config: Value,
    pub fixtures: Vec<FixtureHash>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub data: Value,
    pub provenance: Provenance,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Structured record printed on failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub command: String,
    pub kind: String,
    pub message: String,
}
