//! Probability tables with per-entry error estimates.

use serde::Serialize;

use crate::error::Estimate;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableEntry {
    pub state: u64,
    pub probability: Estimate,
}

/// A pmf over states, possibly truncated, with the mass beyond the last
/// listed state when it is known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionTable {
    pub entries: Vec<TableEntry>,
    /// Probability of states beyond the last entry (finite or not), computed
    /// independently of the entries.
    pub tail: Option<Estimate>,
    /// Upper bound on finite-state mass beyond the last entry, when only a
    /// bound is available.
    pub truncation_bound: Option<f64>,
}

impl DistributionTable {
    pub fn listed_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.probability.value).sum()
    }

    /// Listed mass plus the independently computed tail.
    pub fn total_mass(&self) -> f64 {
        self.listed_mass() + self.tail.as_ref().map_or(0.0, |t| t.value)
    }

    pub fn abs_error(&self) -> f64 {
        self.entries.iter().map(|e| e.probability.abs_error).sum::<f64>()
            + self.tail.as_ref().map_or(0.0, |t| t.abs_error)
    }

    pub fn get(&self, state: u64) -> Option<&Estimate> {
        self.entries.iter().find(|e| e.state == state).map(|e| &e.probability)
    }
}

/// A moment that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn value(&self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(*v),
            Moment::Infinite => None,
        }
    }
}
