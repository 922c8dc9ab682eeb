//! Derivatives by Richardson-extrapolated central differences.

use statrs::function::factorial::binomial;

use crate::error::{Error, Result};

/// A derivative value with its extrapolation error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub abs_error: f64,
}

/// Highest order accepted without an analytic route.
pub const MAX_DIFFERENCE_ORDER: usize = 6;

fn central(h: &dyn Fn(f64) -> f64, order: usize, x: f64, step: f64) -> f64 {
    // Δ^k with nodes x + (k/2 − i)·step, scaled by step^{-k}.
    let mut acc = 0.0;
    for i in 0..=order {
        let c = binomial(order as u64, i as u64);
        let v = h(x + (order as f64 / 2.0 - i as f64) * step);
        acc += if i % 2 == 0 { c * v } else { -c * v };
    }
    acc / step.powi(order as i32)
}

/// k-th derivative of `h` at `x` (Ridders' tableau, error ∝ step²).
///
/// `initial_step` should be a length over which `h` varies by O(1).
pub fn richardson_derivative(
    h: &dyn Fn(f64) -> f64,
    order: usize,
    x: f64,
    initial_step: f64,
) -> Result<Derivative> {
    if order == 0 {
        return Ok(Derivative {
            value: h(x),
            abs_error: 0.0,
        });
    }
    if order > MAX_DIFFERENCE_ORDER {
        return Err(Error::UnsupportedOrder { order });
    }
    const SHRINK: f64 = 1.4;
    const ROWS: usize = 12;
    let mut table = vec![vec![0.0; ROWS]; ROWS];
    let mut step = initial_step;
    table[0][0] = central(h, order, x, step);
    let mut best = table[0][0];
    let mut err = f64::INFINITY;
    for i in 1..ROWS {
        step /= SHRINK;
        table[0][i] = central(h, order, x, step);
        let mut fac = SHRINK * SHRINK;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= SHRINK * SHRINK;
            let e = (table[j][i] - table[j - 1][i])
                .abs()
                .max((table[j][i] - table[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = table[j][i];
            }
        }
        if (table[i][i] - table[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    if !best.is_finite() {
        return Err(Error::quad("finite differences", "non-finite derivative"));
    }
    Ok(Derivative {
        value: best,
        abs_error: err,
    })
}
