//! Experiment reports: input echo, result rows, and inequality checks that
//! always record both sides.

use serde::Serialize;
use serde_json::Value;

use crate::io::sig12;

#[derive(Debug, Clone, Serialize)]
pub struct IneqCheck {
    pub name: String,
    /// Left-hand side, 12 significant digits.
    pub lhs: String,
    pub rhs: String,
    pub relation: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Value,
    pub rows: Vec<Value>,
    pub checks: Vec<IneqCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Wall-clock milliseconds; excluded from determinism comparisons.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: None,
            inputs: Value::Null,
            rows: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            wall_ms: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_inputs(mut self, inputs: Value) -> Self {
        self.inputs = inputs;
        self
    }

    pub fn push_row(&mut self, row: Value) {
        self.rows.push(row);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Records `lhs <= rhs` with both sides.
    pub fn check_le(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) -> bool {
        let holds = lhs <= rhs;
        self.checks.push(IneqCheck {
            name: name.into(),
            lhs: sig12(lhs),
            rhs: sig12(rhs),
            relation: "<=".into(),
            holds,
        });
        holds
    }

    /// Records `lhs >= rhs` with both sides.
    pub fn check_ge(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) -> bool {
        let holds = lhs >= rhs;
        self.checks.push(IneqCheck {
            name: name.into(),
            lhs: sig12(lhs),
            rhs: sig12(rhs),
            relation: ">=".into(),
            holds,
        });
        holds
    }

    /// Records a reported-only ratio (never asserted): holds is always true.
    pub fn report_ratio(&mut self, name: impl Into<String>, value: f64, reference: f64) {
        self.checks.push(IneqCheck {
            name: name.into(),
            lhs: sig12(value),
            rhs: sig12(reference),
            relation: "reported".into(),
            holds: true,
        });
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}
