//! Alternating binomial sums and divided-difference sums.
//!
//! Direct route: exact or log-gamma binomials, error-free products and
//! double-double accumulation, with a running bound on the rounding error.
//! Contour route: the same sums written as a line integral of an analytic
//! continuation of the summand, which has no cancellation at all.

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result, Warning};
use crate::numerics::quad::{half_line, QuadratureSpec};

/// Relative error above which a sum is flagged.
pub const CANCELLATION_THRESHOLD: f64 = 1e-6;

/// A summed value with an estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub warning: Option<Warning>,
}

impl SumEstimate {
    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.abs_error == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.abs_error / self.value.abs()
        }
    }

    pub(crate) fn flagged(value: f64, abs_error: f64, floor: f64) -> Self {
        let mut s = SumEstimate {
            value,
            abs_error,
            warning: None,
        };
        let rel = if value.abs() > floor {
            abs_error / value.abs()
        } else {
            abs_error / floor
        };
        if rel > CANCELLATION_THRESHOLD {
            s.warning = Some(Warning::Cancellation {
                estimated_rel_error: rel,
            });
        }
        s
    }
}

/// Binomial coefficient C(n, k) as f64 with its relative error bound.
pub fn binomial(n: u64, k: u64) -> (f64, f64) {
    if k > n {
        return (0.0, 0.0);
    }
    let k = k.min(n - k);
    if n <= 56 {
        // Exact: the running product stays an integer below 2^63.
        let mut c: u64 = 1;
        for i in 0..k {
            c = c * (n - i) / (i + 1);
        }
        (c as f64, 0.0)
    } else {
        let lg = ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0);
        (lg.exp(), 1e-13 * (1.0 + lg.abs()))
    }
}

/// Double-double accumulator (Ogita-Rump-Oishi style).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Accumulator {
    hi: f64,
    lo: f64,
}

impl Accumulator {
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        (s, err)
    }

    pub fn add(&mut self, x: f64) {
        let (s, e) = Self::two_sum(self.hi, x);
        self.hi = s;
        self.lo += e;
    }

    /// Adds a·b exactly (up to the final rounding of the accumulator).
    pub fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p);
        self.lo += e;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Σ_{j=0}^{n} C(n,j) (-1)^j term(j) with a cancellation estimate.
///
/// `term(j)` is assumed accurate to a few ulps; the error bound is
/// Σ C(n,j)|term(j)| · (binomial error + 4ε).
pub fn alternating_binomial_sum<F: Fn(usize) -> f64>(n: usize, term: F) -> SumEstimate {
    let mut acc = Accumulator::default();
    let mut mass = 0.0;
    for j in 0..=n {
        let (c, c_err) = binomial(n as u64, j as u64);
        let t = term(j);
        let signed = if j % 2 == 0 { t } else { -t };
        acc.add_product(c, signed);
        mass += c * t.abs() * (c_err + 4.0 * f64::EPSILON);
    }
    let value = acc.value();
    SumEstimate::flagged(value, mass + f64::EPSILON * value.abs(), f64::MIN_POSITIVE)
}

/// Σ_m g(x_m) Π_i w_i / Π_{l≠m} (x_l − x_m), the divided-difference sum.
///
/// `weights` multiply into the result (they scale the prefactor in the
/// caller's formula and are folded in per node to avoid overflow).
pub fn divided_sum<F: Fn(usize) -> f64>(nodes: &[f64], weights: &[f64], g: F) -> Result<SumEstimate> {
    check_distinct(nodes)?;
    let mut acc = Accumulator::default();
    let mut mass = 0.0;
    let n = nodes.len();
    for m in 0..n {
        let xm = nodes[m];
        let mut coef = 1.0;
        let mut wi = 0;
        for (l, &xl) in nodes.iter().enumerate() {
            if l == m {
                continue;
            }
            let w = if wi < weights.len() { weights[wi] } else { 1.0 };
            wi += 1;
            coef *= w / (xl - xm);
        }
        for &w in weights.iter().skip(wi) {
            coef *= w;
        }
        let t = g(m);
        acc.add_product(coef, t);
        mass += (coef * t).abs();
    }
    let value = acc.value();
    let err = mass * (2.0 * n as f64 + 4.0) * f64::EPSILON + f64::EPSILON * value.abs();
    Ok(SumEstimate::flagged(value, err, 1e-300))
}

pub(crate) fn check_distinct(nodes: &[f64]) -> Result<()> {
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if nodes[i] == nodes[j] {
                return Err(Error::DegenerateRates { i, j, gap: 0.0 });
            }
        }
    }
    Ok(())
}

/// Contour form of [`divided_sum`] for analytic `g`.
///
/// `g` must be analytic and bounded on Re z > `singular_abscissa`. Nodes at
/// or left of the singular abscissa stay in the kernel but are excluded from
/// the sum (their residues are not enclosed). At least two nodes are
/// required so that the kernel decays like |z|^{-2}. Node i is paired with
/// `weights[i]`; surplus weights multiply the whole kernel.
pub fn divided_sum_contour<G: Fn(Complex64) -> Complex64>(
    nodes: &[f64],
    weights: &[f64],
    g: G,
    singular_abscissa: f64,
    spec: &QuadratureSpec,
) -> Result<SumEstimate> {
    if nodes.len() < 2 {
        return Err(Error::invalid("contour divided sum needs at least two nodes"));
    }
    check_distinct(nodes)?;
    let left = nodes
        .iter()
        .cloned()
        .filter(|&x| x <= singular_abscissa)
        .fold(singular_abscissa, f64::max);
    let lo = nodes
        .iter()
        .cloned()
        .filter(|&x| x > left)
        .fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return Ok(SumEstimate {
            value: 0.0,
            abs_error: 0.0,
            warning: None,
        });
    }
    let cap = lo.abs().max(1.0);
    let gap = if left.is_finite() { (lo - left).min(cap) } else { cap };
    let c = lo - 0.5 * gap;
    let kernel = |z: Complex64| -> Complex64 {
        let mut k = Complex64::new(1.0, 0.0);
        for (i, &x) in nodes.iter().enumerate() {
            let w = weights.get(i).copied().unwrap_or(1.0);
            k *= w / (x - z);
        }
        for &w in weights.iter().skip(nodes.len()) {
            k *= w;
        }
        k
    };
    // Integrate Re[g·K] and |g·K| together: the second tracks conditioning.
    let integrand = |y: f64| -> Complex64 {
        let z = Complex64::new(c, y);
        let v = g(z) * kernel(z);
        Complex64::new(v.re, v.norm())
    };
    let r = half_line(&integrand, lo - c, spec)?;
    let value = r.value.re / std::f64::consts::PI;
    let mass = r.value.im / std::f64::consts::PI;
    let err = r.abs_error / std::f64::consts::PI + 64.0 * f64::EPSILON * mass;
    Ok(SumEstimate::flagged(value, err, 1e-300))
}

/// Contour form of [`alternating_binomial_sum`] for summands g(a + b j).
pub fn alternating_binomial_sum_contour<G: Fn(Complex64) -> Complex64>(
    n: usize,
    a: f64,
    b: f64,
    g: G,
    singular_abscissa: f64,
    spec: &QuadratureSpec,
) -> Result<SumEstimate> {
    // Σ C(n,j)(-1)^j g(a+bj) = n! b^n · Σ_m g(x_m)/Π_{l≠m}(x_l − x_m)
    // with x_j = a + b j; the n! b^n is spread over the nodes as l·b.
    let nodes: Vec<f64> = (0..=n).map(|j| a + b * j as f64).collect();
    let mut weights = vec![1.0];
    weights.extend((1..=n).map(|l| l as f64 * b));
    divided_sum_contour(&nodes, &weights, g, singular_abscissa, spec)
}
