//! Shared numerical kernels.

pub mod altsum;
pub mod diff;
pub mod jet;
pub mod laguerre;
pub mod mittag_leffler;
pub mod quad;
pub mod talbot;

pub use altsum::{alternating_binomial_sum, binomial, divided_sum, SumEstimate};
pub use diff::{richardson_derivative, Derivative};
pub use jet::Jet;
pub use laguerre::{exp_weighted_integral, WeightedIntegral};
pub use mittag_leffler::mittag_leffler;
pub use quad::{QuadratureSpec, QuadResult};
pub use talbot::{invert, InversionSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stopping rule for infinite series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesTruncation {
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    #[serde(default = "default_min_terms")]
    pub min_terms: usize,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
}

fn default_eps() -> f64 {
    1e-12
}
fn default_min_terms() -> usize {
    16
}
fn default_max_terms() -> usize {
    1_000_000
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        SeriesTruncation {
            epsilon: default_eps(),
            min_terms: default_min_terms(),
            max_terms: default_max_terms(),
        }
    }
}

impl SeriesTruncation {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid("series epsilon must lie in (0,1)"));
        }
        if self.min_terms > self.max_terms {
            return Err(Error::invalid("min_terms exceeds max_terms"));
        }
        Ok(())
    }
}
