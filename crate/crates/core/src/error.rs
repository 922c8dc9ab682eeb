use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Errors raised by the analytic and simulation layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("quadrature failed in {context}: {detail}")]
    QuadratureFailure { context: String, detail: String },
    #[error("extended Laplace exponent diverges at -{x}")]
    DivergentExtension { x: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("rates at indices {i} and {j} coincide or are too close ({gap:e})")]
    DegenerateRates { i: usize, j: usize, gap: f64 },
    #[error("derivative order {order} unsupported without exact mode (max 6)")]
    UnsupportedOrder { order: usize },
    #[error("series truncation failed after {terms} terms (last term {last_term:e})")]
    TruncationFailure { terms: usize, last_term: f64 },
    #[error("Laplace inversion failed: {0}")]
    InversionFailure(String),
    #[error("unsupported subordinator family for this operation: {0}")]
    UnsupportedFamily(String),
    #[error("holding-time grid too coarse: bias bound {bias:e} exceeds 1% of mean {mean:e}")]
    GridTooCoarse { bias: f64, mean: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expression error: {0}")]
    Expression(String),
}

impl Error {
    pub(crate) fn quad(context: &str, detail: impl Into<String>) -> Self {
        Error::QuadratureFailure {
            context: context.to_string(),
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal diagnostics attached to numerical results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Alternating sum whose estimated relative error exceeds 1e-6.
    Cancellation { estimated_rel_error: f64 },
    /// A truncated sum whose remainder bound exceeds the requested epsilon.
    IncompleteTruncation { bound: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Cancellation {
                estimated_rel_error,
            } => write!(f, "cancellation(rel_err={estimated_rel_error:.3e})"),
            Warning::IncompleteTruncation { bound } => {
                write!(f, "incomplete_truncation(bound={bound:.3e})")
            }
        }
    }
}

/// A value together with an absolute error estimate and any warnings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub warnings: Vec<Warning>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            abs_error: 0.0,
            warnings: Vec::new(),
        }
    }

    pub fn new(value: f64, abs_error: f64) -> Self {
        Estimate {
            value,
            abs_error,
            warnings: Vec::new(),
        }
    }

    pub fn with_warning(mut self, w: Option<Warning>) -> Self {
        if let Some(w) = w {
            self.warnings.push(w);
        }
        self
    }

    /// Linear combination helper: `self * a`.
    pub fn scaled(mut self, a: f64) -> Self {
        self.value *= a;
        self.abs_error *= a.abs();
        self
    }
}
