//! One-parameter Mittag-Leffler function on the negative axis.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::quad::{half_line, QuadratureSpec};

/// Denominator u² + 2u cos(νπ) + 1 of the real-line representation.
pub(crate) fn ml_denominator(u: f64, nu: f64) -> f64 {
    // (u + cos)^2 + sin^2 avoids cancellation when ν → 1 and u ≈ 1.
    let (s, c) = (nu * PI).sin_cos();
    (u + c) * (u + c) + s * s
}

/// ∫_0^∞ h(u) / (u² + 2u cos νπ + 1) du · sin(νπ)/(νπ).
///
/// This is E_ν(−x) when h(u) = exp(−(u x)^{1/ν}); composing h with a
/// Laplace exponent gives the subordinated variants.
pub fn ml_kernel_integral<H: Fn(f64) -> f64>(nu: f64, h: H, scale: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::invalid(format!("kernel index {nu} must lie in (0,1)")));
    }
    let pref = (nu * PI).sin() / (nu * PI);
    let r = half_line(&|u: f64| h(u) / ml_denominator(u, nu), scale, spec)?;
    Ok(pref * r.value)
}

/// E_{ν,1}(−x) for ν ∈ (0, 1] and x ≥ 0.
pub fn mittag_leffler(nu: f64, x: f64) -> Result<f64> {
    mittag_leffler_with(nu, x, &QuadratureSpec::default())
}

pub fn mittag_leffler_with(nu: f64, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::invalid(format!("index {nu} must lie in (0,1]")));
    }
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("argument {x} must be nonnegative")));
    }
    if nu == 1.0 {
        return Ok((-x).exp());
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let inv = 1.0 / nu;
    let scale = if x > 1.0 { 1.0 / x } else { 1.0 };
    let v = ml_kernel_integral(nu, |u| (-(u * x).powf(inv)).exp(), scale, spec)?;
    Ok(v.clamp(0.0, 1.0))
}
