//! Gauss-Laguerre rules and the e^{-w}-weighted half-line integral.

use std::sync::{Mutex, OnceLock};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numerics::quad::{gauss_legendre, half_line, QuadValue, QuadratureSpec};

/// Nodes and weights of the n-point Gauss-Laguerre rule.
#[derive(Debug, Clone)]
pub struct LaguerreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LaguerreRule {
    /// Golub-Welsch: eigen-decomposition of the Jacobi matrix with
    /// diagonal 2i+1 and off-diagonal i, via implicit QL. Only the first
    /// component of each eigenvector is tracked, which gives the weights.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut d: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 + 1.0).collect();
        let mut e: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
        e[n - 1] = 0.0;
        let mut z = vec![0.0; n];
        z[0] = 1.0;

        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                assert!(iter < 100, "Gauss-Laguerre QL iteration did not converge");
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut i = m;
                let mut underflow = false;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    let fz = z[i + 1];
                    z[i + 1] = s * z[i] + c * fz;
                    z[i] = c * z[i] - s * fz;
                }
                if underflow {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|v| v * v)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        LaguerreRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn apply<F: Fn(f64) -> f64>(&self, g: &F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| if w > 0.0 { w * g(x) } else { 0.0 })
            .sum()
    }
}

fn cached_rule(n: usize) -> std::sync::Arc<LaguerreRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<LaguerreRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = std::sync::Arc::new(LaguerreRule::new(n));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

/// How an exp-weighted integral was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightedMethod {
    GaussLaguerre { nodes: usize },
    Adaptive,
}

#[derive(Debug, Clone, Copy)]
pub struct WeightedIntegral {
    pub value: f64,
    pub abs_error: f64,
    pub method: WeightedMethod,
}

const MAX_LAGUERRE_NODES: usize = 512;

/// ∫_0^∞ e^{-w} g(w) dw.
///
/// Gauss-Laguerre with node doubling from `spec.node_count`; integrands that
/// are not smooth enough for the doubling to settle (e.g. w^α near the
/// origin) are handed to the dyadic adaptive driver instead.
pub fn exp_weighted_integral<F: Fn(f64) -> f64 + Sync>(
    g: &F,
    spec: &QuadratureSpec,
) -> Result<WeightedIntegral> {
    spec.validate()?;
    let mut n = spec.node_count;
    let mut prev = cached_rule(n).apply(g);
    let mut rounds = 0;
    while n < MAX_LAGUERRE_NODES && rounds < spec.max_refinements {
        n *= 2;
        rounds += 1;
        let cur = cached_rule(n).apply(g);
        if !cur.is_finite() {
            break;
        }
        let diff = (cur - prev).abs();
        if diff <= spec.tolerance_abs.max(spec.tolerance_rel * cur.abs()) {
            return Ok(WeightedIntegral {
                value: cur,
                abs_error: diff,
                method: WeightedMethod::GaussLaguerre { nodes: n },
            });
        }
        prev = cur;
    }
    adaptive_weighted(g, spec)
}

/// ∫_0^∞ e^{-w} g(w) dw by the dyadic adaptive driver only.
pub fn adaptive_weighted<F: Fn(f64) -> f64>(g: &F, spec: &QuadratureSpec) -> Result<WeightedIntegral> {
    let r = half_line(&|w: f64| (-w).exp() * g(w), 1.0, spec)?;
    if !r.value.is_finite() {
        return Err(Error::quad("exp-weighted", "non-finite value"));
    }
    Ok(WeightedIntegral {
        value: r.value,
        abs_error: r.abs_error,
        method: WeightedMethod::Adaptive,
    })
}

struct PanelRules {
    fine: (Vec<f64>, Vec<f64>),
    coarse: (Vec<f64>, Vec<f64>),
}

fn panel_rules() -> &'static PanelRules {
    static RULES: OnceLock<PanelRules> = OnceLock::new();
    RULES.get_or_init(|| PanelRules {
        fine: gauss_legendre(20),
        coarse: gauss_legendre(10),
    })
}

/// Componentwise ∫_0^∞ e^{-w} g(w) dw for vector-valued g.
#[derive(Debug, Clone)]
pub struct VectorIntegral<T> {
    pub values: Vec<T>,
    pub abs_errors: Vec<f64>,
}

const MAX_LOWER_PIECES: usize = 1100;
const UPPER_PIECES: i32 = 11;

/// Vector version of [`exp_weighted_integral`]: every component shares the
/// same evaluation points, which matters when g is expensive and produces
/// many related quantities at once (e.g. all Taylor coefficients of a jet).
/// Pieces are dyadic, so algebraic behaviour at the origin is resolved; the
/// remainder below the last piece is bounded geometrically.
pub fn exp_weighted_vector<T: QuadValue, G: Fn(f64) -> Vec<T>>(
    g: &G,
    len: usize,
    spec: &QuadratureSpec,
) -> Result<VectorIntegral<T>> {
    spec.validate()?;
    let rules = panel_rules();
    let piece = |a: f64, b: f64| -> Result<(Vec<T>, Vec<f64>)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut fine = vec![T::zero(); len];
        let mut coarse = vec![T::zero(); len];
        let mut mass = vec![0.0; len];
        for (rule, acc, track) in [(&rules.fine, &mut fine, true), (&rules.coarse, &mut coarse, false)] {
            for (x, w) in rule.0.iter().zip(&rule.1) {
                let wv = mid + half * x;
                let weight = w * half * (-wv).exp();
                if weight == 0.0 {
                    continue;
                }
                let v = g(wv);
                if v.len() != len {
                    return Err(Error::quad("exp-weighted vector", "integrand length changed"));
                }
                for i in 0..len {
                    if !v[i].norm().is_finite() {
                        return Err(Error::quad("exp-weighted vector", format!("non-finite integrand at w={wv}")));
                    }
                    acc[i] = acc[i] + v[i] * weight;
                    if track {
                        mass[i] += v[i].norm() * weight;
                    }
                }
            }
        }
        let err = (0..len)
            .map(|i| (fine[i] - coarse[i]).norm() + 4.0 * f64::EPSILON * mass[i])
            .collect();
        Ok((fine, err))
    };
    let mut total = vec![T::zero(); len];
    let mut err = vec![0.0; len];
    let add = |v: &[T], e: &[f64], total: &mut Vec<T>, err: &mut Vec<f64>| {
        for i in 0..len {
            total[i] = total[i] + v[i];
            err[i] += e[i];
        }
    };
    for j in 0..UPPER_PIECES {
        let a = 2f64.powi(j);
        let (v, e) = piece(a, 2.0 * a)?;
        add(&v, &e, &mut total, &mut err);
    }
    // Below w = 1: pieces [2^{-j-1}, 2^{-j}], stopping once every component's
    // geometric remainder is below tolerance.
    let mut prev: Option<Vec<f64>> = None;
    let mut done = false;
    for j in 0..MAX_LOWER_PIECES {
        let b = 2f64.powi(-(j as i32));
        let (v, e) = piece(0.5 * b, b)?;
        add(&v, &e, &mut total, &mut err);
        let norms: Vec<f64> = v.iter().map(|x| x.norm()).collect();
        if let Some(p) = &prev {
            let mut remainder = vec![0.0; len];
            let mut ok = j >= 4;
            for i in 0..len {
                let target = spec.tolerance_abs * 1e-3 + spec.tolerance_rel * 0.01 * total[i].norm();
                if norms[i] == 0.0 && p[i] == 0.0 {
                    continue;
                }
                let q = if p[i] > 0.0 { norms[i] / p[i] } else { 1.0 };
                if q < 0.95 {
                    remainder[i] = norms[i] * q / (1.0 - q);
                } else {
                    remainder[i] = f64::INFINITY;
                }
                if remainder[i] > target {
                    ok = false;
                }
            }
            if ok {
                for i in 0..len {
                    err[i] += remainder[i];
                }
                done = true;
                break;
            }
        }
        prev = Some(norms);
    }
    if !done {
        return Err(Error::quad(
            "exp-weighted vector",
            "integrand does not decay geometrically toward the origin",
        ));
    }
    Ok(VectorIntegral {
        values: total,
        abs_errors: err,
    })
}
