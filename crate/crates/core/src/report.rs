//! Machine-checkable reports for evaluated inequalities.

use crate::dispersion::FrequencyBand;
use serde::{Deserialize, Serialize};

/// Default tolerance for `pass` decisions on bound slacks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A frequency/value pair witnessing an extremum of a checked quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub omega: f64,
    pub value: f64,
}

/// Outcome of one inequality check `lhs ≤ rhs` over a band.
///
/// `slack = rhs - lhs`; the check passes iff `slack ≥ -tol` for the tolerance
/// used at evaluation time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub band: FrequencyBand,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    pub notes: String,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, band: FrequencyBand, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Self {
            name: name.into(),
            band,
            lhs,
            rhs,
            slack,
            pass: slack >= -tol,
            witnesses: Vec::new(),
            notes: String::new(),
        }
    }

    pub fn with_witness(mut self, omega: f64, value: f64) -> Self {
        self.witnesses.push(Witness { omega, value });
        self
    }

    pub fn with_note(mut self, note: impl AsRef<str>) -> Self {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(note.as_ref());
        self
    }
}
