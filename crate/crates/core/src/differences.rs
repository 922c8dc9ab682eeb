//! Finite differences of t ↦ e^{-t f(x)} over node sets, the common core of
//! the birth and death laws. The direct compensated sum is tried first; when
//! it loses too much to cancellation and f continues analytically, the
//! contour form is used instead.

use num_complex::Complex64;

use crate::bernstein::BernsteinFunction;
use crate::error::{Error, Estimate, Result};
use crate::numerics::altsum::{
    alternating_binomial_sum, alternating_binomial_sum_contour, divided_sum, divided_sum_contour, SumEstimate,
};
use crate::numerics::QuadratureSpec;

/// Relative error below which the direct route is accepted outright.
const DIRECT_OK: f64 = 1e-11;

/// Contour integrals run at tight tolerances: they are only used when the
/// direct sum has already lost digits.
fn contour_spec() -> QuadratureSpec {
    QuadratureSpec {
        tolerance_abs: 1e-20,
        tolerance_rel: 1e-13,
        ..QuadratureSpec::default()
    }
}

fn decay(f: &BernsteinFunction, t: f64, x: f64) -> Result<f64> {
    Ok((-t * f.eval(x)?).exp())
}

fn to_estimate(s: SumEstimate) -> Estimate {
    Estimate::new(s.value, s.abs_error).with_warning(s.warning)
}

fn finite(s: &SumEstimate) -> bool {
    s.value.is_finite() && s.abs_error.is_finite()
}

fn pick(direct: SumEstimate, contour: Result<SumEstimate>) -> Result<SumEstimate> {
    match contour {
        Ok(c) if finite(&c) && (!finite(&direct) || c.abs_error < direct.abs_error) => Ok(c),
        Err(e) if !finite(&direct) => Err(e),
        _ => usable(direct),
    }
}

/// Large node sets overflow the binomial weights of the direct sum.
fn usable(s: SumEstimate) -> Result<SumEstimate> {
    if finite(&s) {
        Ok(s)
    } else {
        Err(Error::quad("finite difference", "direct sum overflowed and no contour form applies"))
    }
}

fn needs_contour(s: &SumEstimate) -> bool {
    !(s.abs_error <= DIRECT_OK * s.value.abs().max(1e-300))
}

/// Σ_{j=0}^{n} C(n,j)(−1)^j e^{−t f(a + b j)}.
pub fn binomial_decay_sum(f: &BernsteinFunction, t: f64, n: usize, a: f64, b: f64) -> Result<Estimate> {
    let terms: Vec<f64> = (0..=n).map(|j| decay(f, t, a + b * j as f64)).collect::<Result<_>>()?;
    let direct = alternating_binomial_sum(n, |j| terms[j]);
    if n < 1 || !needs_contour(&direct) || t == 0.0 {
        return usable(direct).map(to_estimate);
    }
    let Some(branch) = f.singular_abscissa() else {
        return usable(direct).map(to_estimate);
    };
    let g = |z: Complex64| (-f.eval_complex(z).unwrap() * t).exp();
    let spec = contour_spec();
    let mut contour = alternating_binomial_sum_contour(n, a, b, g, branch, &spec);
    // Nodes on or left of the branch point are excluded from the contour
    // sum; add them back directly.
    if let Ok(c) = contour.as_mut() {
        for (j, &tj) in terms.iter().enumerate() {
            if a + b * j as f64 <= branch {
                let (cb, _) = crate::numerics::binomial(n as u64, j as u64);
                let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
                c.value += sgn * cb * tj;
            }
        }
    }
    pick(direct, contour).map(to_estimate)
}

/// Π weights · Σ_m g(x_m) / Π_{l≠m}(x_l − x_m) with g(x) = e^{−t f(x)} / x^p,
/// p ∈ {0, 1}.
pub fn divided_decay_sum(
    f: &BernsteinFunction,
    t: f64,
    nodes: &[f64],
    weights: &[f64],
    inverse_power: i32,
) -> Result<Estimate> {
    let vals: Vec<f64> = nodes
        .iter()
        .map(|&x| Ok(decay(f, t, x)? / x.powi(inverse_power)))
        .collect::<Result<_>>()?;
    let direct = divided_sum(nodes, weights, |m| vals[m])?;
    if nodes.len() < 2 || !needs_contour(&direct) {
        return usable(direct).map(to_estimate);
    }
    let Some(branch) = f.singular_abscissa() else {
        return usable(direct).map(to_estimate);
    };
    let branch = if inverse_power > 0 { branch.max(0.0) } else { branch };
    if nodes.iter().any(|&x| x <= branch) {
        return usable(direct).map(to_estimate);
    }
    let g = |z: Complex64| (-f.eval_complex(z).unwrap() * t).exp() / z.powi(inverse_power);
    let contour = divided_sum_contour(nodes, weights, g, branch, &contour_spec());
    pick(direct, contour).map(to_estimate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_binomial_sum_via_contour() {
        // Σ_j C(n,j)(−1)^j e^{−log(1+(j+1))} = Σ C(n,j)(−1)^j/(j+2) = 1/((n+1)(n+2)).
        let g = BernsteinFunction::gamma(1.0).unwrap();
        for n in [5usize, 80, 200] {
            let v = binomial_decay_sum(&g, 1.0, n, 1.0, 1.0).unwrap();
            let want = 1.0 / ((n + 1) as f64 * (n + 2) as f64);
            assert!(((v.value - want) / want).abs() < 1e-8, "n={n}: {} vs {want}", v.value);
        }
    }

    #[test]
    fn branch_node_added_back() {
        // E[(1 − e^{−H})^n] for H with E e^{−uH} = e^{−√u}, whose density is
        // s^{−3/2} e^{−1/(4s)} / (2√π).
        let s = BernsteinFunction::stable(0.5).unwrap();
        let spec = QuadratureSpec::default();
        for n in [12usize, 90] {
            let v = binomial_decay_sum(&s, 1.0, n, 0.0, 1.0).unwrap();
            let dens = |x: f64| (-(-x).exp_m1()).powi(n as i32) * x.powf(-1.5) * (-0.25 / x).exp()
                / (2.0 * std::f64::consts::PI.sqrt());
            let want = crate::numerics::quad::half_line(&dens, 1.0, &spec).unwrap().value;
            assert!(((v.value - want) / want).abs() < 1e-8, "n={n}: {} vs {want}", v.value);
        }
    }
}
