//! Fixed-Talbot numerical Laplace inversion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contour node count and acceptance tolerance for inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionSpec {
    pub nodes: usize,
    pub tolerance: f64,
}

impl Default for InversionSpec {
    fn default() -> Self {
        InversionSpec {
            nodes: 32,
            tolerance: 1e-6,
        }
    }
}

/// Inversion result: value at M nodes and |difference| against M/2 nodes.
#[derive(Debug, Clone, Copy)]
pub struct Inverted {
    pub value: f64,
    pub abs_error: f64,
}

fn talbot_once<F: Fn(Complex64) -> Result<Complex64>>(transform: &F, t: f64, m: usize) -> Result<f64> {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = 0.5 * (transform(Complex64::new(r, 0.0))? * (r * t).exp()).re;
    for k in 1..m {
        let theta = k as f64 * std::f64::consts::PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (s * t).exp() * transform(s)? * Complex64::new(1.0, sigma);
        acc += term.re;
    }
    Ok(acc * r / m as f64)
}

/// Inverts `transform` at time `t > 0`.
///
/// The transform must be analytic to the right of the Talbot contour,
/// i.e. away from a cut along the negative real axis.
pub fn invert<F: Fn(Complex64) -> Result<Complex64>>(transform: &F, t: f64, spec: &InversionSpec) -> Result<Inverted> {
    if !(t > 0.0) {
        return Err(Error::InversionFailure(format!("time {t} must be positive")));
    }
    if spec.nodes < 8 {
        return Err(Error::InversionFailure("at least 8 contour nodes required".into()));
    }
    let full = talbot_once(transform, t, spec.nodes)?;
    let half = talbot_once(transform, t, spec.nodes / 2)?;
    let err = (full - half).abs();
    if !full.is_finite() || err > spec.tolerance.max(spec.tolerance * full.abs()) {
        return Err(Error::InversionFailure(format!(
            "estimates at {} and {} nodes differ by {err:e} (value {full:e}); transform decays too slowly",
            spec.nodes,
            spec.nodes / 2
        )));
    }
    Ok(Inverted {
        value: full,
        abs_error: err,
    })
}
