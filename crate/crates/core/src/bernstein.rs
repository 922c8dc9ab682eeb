//! Bernstein functions (Laplace exponents of subordinators) and their Lévy
//! measures.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::numerics::quad::{finish, one_side, QuadratureSpec, Side};

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A Lévy density on (0, ∞) with the metadata quadrature relies on.
#[derive(Clone)]
pub struct LevyMeasure {
    density: Density,
    /// p with ν(s) ~ C s^{-1-p} as s → 0.
    pub singularity_order: f64,
    /// θ with ν(s) ≤ C e^{-θ s} for large s; `None` means no exponential decay.
    pub exponential_tail_rate: Option<f64>,
    expression: Option<Expr>,
}

impl fmt::Debug for LevyMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyMeasure")
            .field("singularity_order", &self.singularity_order)
            .field("exponential_tail_rate", &self.exponential_tail_rate)
            .field("expression", &self.expression.as_ref().map(|e| e.source()))
            .finish()
    }
}

impl PartialEq for LevyMeasure {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.density, &other.density)
            || (self.expression.is_some()
                && self.expression == other.expression
                && self.singularity_order == other.singularity_order
                && self.exponential_tail_rate == other.exponential_tail_rate)
    }
}

const PROBE_GRID: [f64; 13] = [
    1e-12, 1e-9, 1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0, 1e4, 1e6,
];

impl LevyMeasure {
    /// Builds a measure from a density closure and checks it numerically:
    /// nonnegative on a probe grid and ∫ min(s, 1) ν(ds) finite.
    pub fn new<F>(density: F, singularity_order: f64, exponential_tail_rate: Option<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::build(Arc::new(density), singularity_order, exponential_tail_rate, None)
    }

    /// Parses a density expression in `s`.
    pub fn from_expression(src: &str, singularity_order: f64, exponential_tail_rate: Option<f64>) -> Result<Self> {
        let expr = Expr::parse(src)?;
        let e2 = expr.clone();
        Self::build(
            Arc::new(move |s| e2.eval(s)),
            singularity_order,
            exponential_tail_rate,
            Some(expr),
        )
    }

    fn build(
        density: Density,
        singularity_order: f64,
        exponential_tail_rate: Option<f64>,
        expression: Option<Expr>,
    ) -> Result<Self> {
        if !(singularity_order < 1.0) || !singularity_order.is_finite() {
            return Err(Error::invalid(format!(
                "singularity order {singularity_order} must be finite and below 1"
            )));
        }
        if let Some(th) = exponential_tail_rate {
            if !(th >= 0.0) || !th.is_finite() {
                return Err(Error::invalid("exponential tail rate must be finite and nonnegative"));
            }
        }
        for &s in &PROBE_GRID {
            let v = density(s);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("Lévy density is {v} at s = {s}")));
            }
        }
        let m = LevyMeasure {
            density,
            singularity_order,
            exponential_tail_rate,
            expression,
        };
        let mass = m.integrate(&|s: f64| s.min(1.0), 1.0, &QuadratureSpec::default())?;
        if !mass.is_finite() {
            return Err(Error::invalid("∫ min(s,1) ν(ds) is not finite"));
        }
        Ok(m)
    }

    pub fn density(&self, s: f64) -> f64 {
        (self.density)(s)
    }

    pub fn expression(&self) -> Option<&str> {
        self.expression.as_ref().map(|e| e.source())
    }

    /// ∫ g(s) ν(ds) with the small-s side mapped through s = c·u^{1/(1−p)}.
    fn integrate(&self, g: &dyn Fn(f64) -> f64, scale: f64, spec: &QuadratureSpec) -> Result<f64> {
        let weighted = |s: f64| {
            let gv = g(s);
            if gv == 0.0 {
                0.0
            } else {
                gv * self.density(s)
            }
        };
        let upper = one_side(&weighted, scale, Side::Infinity, spec, None)?;
        let p = self.singularity_order;
        let lower = if p > 0.0 {
            let m = 1.0 / (1.0 - p);
            let mapped = |u: f64| {
                let s = scale * u.powf(m);
                if s == 0.0 {
                    return 0.0;
                }
                // ds = m s / u du
                weighted(s) * m * s / u
            };
            one_side(&mapped, 1.0, Side::Zero, spec, Some(upper.value.abs()))?
        } else {
            one_side(&weighted, scale, Side::Zero, spec, Some(upper.value.abs()))?
        };
        let r = finish(
            upper.value + lower.value,
            upper.abs_error + lower.abs_error,
            upper.evaluations + lower.evaluations,
            spec,
        )?;
        Ok(r.value)
    }
}

/// A Bernstein function with zero drift.
#[derive(Clone, Debug, PartialEq)]
pub enum BernsteinFunction {
    /// f(x) = x^α.
    Stable { alpha: f64 },
    /// f(x) = (x + θ)^α − θ^α.
    TemperedStable { alpha: f64, theta: f64 },
    /// f(x) = log(1 + x/a).
    Gamma { rate: f64 },
    /// f given by a Lévy density.
    Custom(LevyMeasure),
    /// kill_rate + base.
    Killed { base: Box<BernsteinFunction>, kill_rate: f64 },
}

fn check_index(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("stability index {alpha} must lie in (0,1)")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_arg(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("argument {x} must be finite and nonnegative")))
    }
}

/// Generalised binomial coefficients C(α, i), i = 0..=n.
fn gen_binomials(alpha: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut c = 1.0;
    out.push(c);
    for i in 1..=n {
        c *= (alpha - (i - 1) as f64) / i as f64;
        out.push(c);
    }
    out
}

impl BernsteinFunction {
    pub fn stable(alpha: f64) -> Result<Self> {
        check_index(alpha)?;
        Ok(BernsteinFunction::Stable { alpha })
    }

    pub fn tempered_stable(alpha: f64, theta: f64) -> Result<Self> {
        check_index(alpha)?;
        check_positive("tempering rate", theta)?;
        Ok(BernsteinFunction::TemperedStable { alpha, theta })
    }

    pub fn gamma(rate: f64) -> Result<Self> {
        check_positive("gamma rate", rate)?;
        Ok(BernsteinFunction::Gamma { rate })
    }

    pub fn custom(measure: LevyMeasure) -> Self {
        BernsteinFunction::Custom(measure)
    }

    /// Adds killing at the given rate; killing an already killed function
    /// adds the rates.
    pub fn killed(base: BernsteinFunction, kill_rate: f64) -> Result<Self> {
        if !(kill_rate >= 0.0) || !kill_rate.is_finite() {
            return Err(Error::invalid(format!("kill rate {kill_rate} must be finite and nonnegative")));
        }
        Ok(match base {
            BernsteinFunction::Killed { base, kill_rate: a } => BernsteinFunction::Killed {
                base,
                kill_rate: a + kill_rate,
            },
            other => BernsteinFunction::Killed {
                base: Box::new(other),
                kill_rate,
            },
        })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            BernsteinFunction::Stable { .. } => "stable",
            BernsteinFunction::TemperedStable { .. } => "tempered_stable",
            BernsteinFunction::Gamma { .. } => "gamma",
            BernsteinFunction::Custom(_) => "custom",
            BernsteinFunction::Killed { .. } => "killed",
        }
    }

    pub fn kill_rate(&self) -> f64 {
        match self {
            BernsteinFunction::Killed { kill_rate, .. } => *kill_rate,
            _ => 0.0,
        }
    }

    /// The function without killing.
    pub fn unkilled(&self) -> &BernsteinFunction {
        match self {
            BernsteinFunction::Killed { base, .. } => base,
            other => other,
        }
    }

    pub fn is_named(&self) -> bool {
        !matches!(self.unkilled(), BernsteinFunction::Custom(_))
    }

    /// Whether f is analytic at the origin (smooth integrands for
    /// Gauss-Laguerre).
    pub fn is_smooth_at_origin(&self) -> bool {
        matches!(
            self.unkilled(),
            BernsteinFunction::TemperedStable { .. } | BernsteinFunction::Gamma { .. }
        )
    }

    pub fn singularity_order(&self) -> f64 {
        match self.unkilled() {
            BernsteinFunction::Stable { alpha } | BernsteinFunction::TemperedStable { alpha, .. } => *alpha,
            BernsteinFunction::Gamma { .. } => 0.0,
            BernsteinFunction::Custom(m) => m.singularity_order,
            BernsteinFunction::Killed { .. } => unreachable!(),
        }
    }

    /// Exponential decay rate of the Lévy density (0 when heavy tailed).
    pub fn exponential_tail_rate(&self) -> f64 {
        match self.unkilled() {
            BernsteinFunction::Stable { .. } => 0.0,
            BernsteinFunction::TemperedStable { theta, .. } => *theta,
            BernsteinFunction::Gamma { rate } => *rate,
            BernsteinFunction::Custom(m) => m.exponential_tail_rate.unwrap_or(0.0),
            BernsteinFunction::Killed { .. } => unreachable!(),
        }
    }

    /// Lévy density ν(s) of the unkilled part.
    pub fn levy_density(&self, s: f64) -> f64 {
        match self.unkilled() {
            BernsteinFunction::Stable { alpha } => alpha / gamma(1.0 - alpha) * s.powf(-alpha - 1.0),
            BernsteinFunction::TemperedStable { alpha, theta } => {
                alpha / gamma(1.0 - alpha) * (-theta * s - (alpha + 1.0) * s.ln()).exp()
            }
            BernsteinFunction::Gamma { rate } => (-rate * s).exp() / s,
            BernsteinFunction::Custom(m) => m.density(s),
            BernsteinFunction::Killed { .. } => unreachable!(),
        }
    }

    /// The Lévy measure of the unkilled part as a standalone measure.
    pub fn levy_measure(&self) -> LevyMeasure {
        if let BernsteinFunction::Custom(m) = self.unkilled() {
            return m.clone();
        }
        let me = self.unkilled().clone();
        let p = me.singularity_order();
        let tail = me.exponential_tail_rate();
        LevyMeasure {
            density: Arc::new(move |s| me.levy_density(s)),
            singularity_order: p,
            exponential_tail_rate: if tail > 0.0 { Some(tail) } else { None },
            expression: None,
        }
    }

    /// f(x) for x ≥ 0.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_with(x, &QuadratureSpec::default())
    }

    pub fn eval_with(&self, x: f64, spec: &QuadratureSpec) -> Result<f64> {
        check_arg(x)?;
        Ok(match self {
            BernsteinFunction::Stable { alpha } => x.powf(*alpha),
            BernsteinFunction::TemperedStable { alpha, theta } => {
                theta.powf(*alpha) * (alpha * (x / theta).ln_1p()).exp_m1()
            }
            BernsteinFunction::Gamma { rate } => (x / rate).ln_1p(),
            BernsteinFunction::Custom(m) => {
                if x == 0.0 {
                    0.0
                } else {
                    m.integrate(&|s: f64| -(-x * s).exp_m1(), 1.0 / x, spec)
                        .map_err(|e| relabel(e, "eval_f"))?
                }
            }
            BernsteinFunction::Killed { base, kill_rate } => kill_rate + base.eval_with(x, spec)?,
        })
    }

    /// f(−x) = ∫ (1 − e^{sx}) ν(ds), the extension to negative arguments.
    pub fn eval_extended(&self, x: f64) -> Result<f64> {
        self.eval_extended_with(x, &QuadratureSpec::default())
    }

    pub fn eval_extended_with(&self, x: f64, spec: &QuadratureSpec) -> Result<f64> {
        check_arg(x)?;
        if let BernsteinFunction::Killed { .. } = self {
            return Err(Error::PreconditionViolation(
                "the extension to negative arguments is defined for unkilled functions only".into(),
            ));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if x >= self.exponential_tail_rate() {
            return Err(Error::DivergentExtension { x });
        }
        Ok(match self {
            BernsteinFunction::TemperedStable { alpha, theta } => {
                theta.powf(*alpha) * (alpha * (-x / theta).ln_1p()).exp_m1()
            }
            BernsteinFunction::Gamma { rate } => (-x / rate).ln_1p(),
            BernsteinFunction::Custom(m) => m
                .integrate(&|s: f64| -(x * s).exp_m1(), 1.0 / x, spec)
                .map_err(|e| relabel(e, "eval_f_extended"))?,
            _ => unreachable!(),
        })
    }

    /// n-th derivative f^{(n)}(x), n ≥ 1, x > 0.
    pub fn derivative(&self, n: usize, x: f64) -> Result<f64> {
        if n == 0 {
            return self.eval(x);
        }
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::invalid(format!("derivative point {x} must be positive")));
        }
        Ok(match self.unkilled() {
            BernsteinFunction::Stable { alpha } => falling(*alpha, n) * x.powf(alpha - n as f64),
            BernsteinFunction::TemperedStable { alpha, theta } => {
                falling(*alpha, n) * (x + theta).powf(alpha - n as f64)
            }
            BernsteinFunction::Gamma { rate } => {
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                let mut fact = 1.0;
                for i in 1..n {
                    fact *= i as f64;
                }
                sign * fact / (x + rate).powi(n as i32)
            }
            BernsteinFunction::Custom(m) => {
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                sign * m
                    .integrate(&|s: f64| s.powi(n as i32) * (-x * s).exp(), 1.0 / x, &QuadratureSpec::default())
                    .map_err(|e| relabel(e, "eval_f_derivative"))?
            }
            BernsteinFunction::Killed { .. } => unreachable!(),
        })
    }

    /// Scaled Taylor coefficients b_i = x^i f^{(i)}(x)/i!, i = 0..=order,
    /// i.e. the coefficients of h ↦ f(x(1 + h)).
    pub fn scaled_taylor(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        check_arg(x)?;
        let mut out = match self.unkilled() {
            BernsteinFunction::Stable { alpha } => {
                let base = x.powf(*alpha);
                gen_binomials(*alpha, order).into_iter().map(|c| c * base).collect()
            }
            BernsteinFunction::TemperedStable { alpha, theta } => {
                let rho = x / (x + theta);
                let base = (x + theta).powf(*alpha);
                let mut v: Vec<f64> = gen_binomials(*alpha, order)
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| c * base * rho.powi(i as i32))
                    .collect();
                v[0] = self.unkilled().eval(x)?;
                v
            }
            BernsteinFunction::Gamma { rate } => {
                let rho = x / (x + rate);
                let mut v = vec![(x / rate).ln_1p()];
                let mut p = 1.0;
                for i in 1..=order {
                    p *= rho;
                    let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                    v.push(sign * p / i as f64);
                }
                v
            }
            BernsteinFunction::Custom(_) => {
                let mut v = vec![self.unkilled().eval(x)?];
                let mut xp = 1.0;
                let mut fact = 1.0;
                for i in 1..=order {
                    xp *= x;
                    fact *= i as f64;
                    if x == 0.0 {
                        v.push(0.0);
                    } else {
                        v.push(xp * self.derivative(i, x)? / fact);
                    }
                }
                v
            }
            BernsteinFunction::Killed { .. } => unreachable!(),
        };
        out[0] += self.kill_rate();
        Ok(out)
    }

    /// Analytic continuation of f to the complex plane, where available.
    pub fn eval_complex(&self, z: Complex64) -> Option<Complex64> {
        match self {
            BernsteinFunction::Stable { alpha } => Some(z.powf(*alpha)),
            BernsteinFunction::TemperedStable { alpha, theta } => {
                Some((z + theta).powf(*alpha) - theta.powf(*alpha))
            }
            BernsteinFunction::Gamma { rate } => Some((z / rate).ln_1p_complex()),
            BernsteinFunction::Custom(_) => None,
            BernsteinFunction::Killed { base, kill_rate } => base.eval_complex(z).map(|v| v + kill_rate),
        }
    }

    /// Abscissa of the branch point of the continuation: f is analytic on
    /// Re z > this value.
    pub fn singular_abscissa(&self) -> Option<f64> {
        match self.unkilled() {
            BernsteinFunction::Stable { .. } => Some(0.0),
            BernsteinFunction::TemperedStable { theta, .. } => Some(-theta),
            BernsteinFunction::Gamma { rate } => Some(-rate),
            _ => None,
        }
    }

    /// ∫ g(s) ν(ds) over the Lévy measure of the unkilled part.
    ///
    /// `g` must be O(s) at the origin and bounded.
    pub fn levy_integral<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        self.levy_integral_with(g, 1.0, &QuadratureSpec::default())
    }

    /// As [`levy_integral`](Self::levy_integral) with an explicit split
    /// point (the length scale on which `g` varies).
    pub fn levy_integral_with<G: Fn(f64) -> f64>(&self, g: G, scale: f64, spec: &QuadratureSpec) -> Result<f64> {
        let r_far = (g(1e-12) / 1e-12).abs();
        let r_near = (g(1e-15) / 1e-15).abs();
        if !r_near.is_finite() || (r_near > 500.0 * r_far && r_near > 1e-3) {
            return Err(Error::PreconditionViolation(format!(
                "weight is not O(s) at the origin: |g(s)|/s grows from {r_far:e} to {r_near:e}"
            )));
        }
        let m = match self.unkilled() {
            BernsteinFunction::Custom(m) => m.clone(),
            other => other.levy_measure(),
        };
        m.integrate(&g, scale, spec).map_err(|e| relabel(e, "levy_integral"))
    }
}

fn relabel(e: Error, context: &str) -> Error {
    match e {
        Error::QuadratureFailure { detail, .. } => Error::QuadratureFailure {
            context: context.to_string(),
            detail,
        },
        other => other,
    }
}

/// α(α−1)…(α−n+1).
fn falling(alpha: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (alpha - i as f64))
}

trait ComplexLn1p {
    fn ln_1p_complex(self) -> Complex64;
}

impl ComplexLn1p for Complex64 {
    fn ln_1p_complex(self) -> Complex64 {
        if self.norm() < 1e-4 {
            // log(1+z) = z − z²/2 + z³/3 − …
            let mut term = self;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 1..12 {
                acc += term / k as f64 * if k % 2 == 1 { 1.0 } else { -1.0 };
                term *= self;
            }
            acc
        } else {
            (self + 1.0).ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn custom_copy(f: &BernsteinFunction) -> BernsteinFunction {
        BernsteinFunction::custom(f.levy_measure())
    }

    fn named() -> Vec<BernsteinFunction> {
        vec![
            BernsteinFunction::stable(0.3).unwrap(),
            BernsteinFunction::stable(0.5).unwrap(),
            BernsteinFunction::stable(0.7).unwrap(),
            BernsteinFunction::tempered_stable(0.5, 2.0).unwrap(),
            BernsteinFunction::gamma(1.0).unwrap(),
            BernsteinFunction::gamma(3.0).unwrap(),
        ]
    }

    #[test]
    fn closed_forms() {
        assert_eq!(BernsteinFunction::stable(0.5).unwrap().eval(4.0).unwrap(), 2.0);
        assert_eq!(BernsteinFunction::gamma(1.0).unwrap().eval(0.0).unwrap(), 0.0);
        let k = BernsteinFunction::killed(BernsteinFunction::stable(0.5).unwrap(), 1.0).unwrap();
        assert_eq!(k.eval(4.0).unwrap(), 3.0);
        assert_eq!(k.eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn extended_values() {
        let ts = BernsteinFunction::tempered_stable(0.5, 2.0).unwrap();
        let v = ts.eval_extended(1.0).unwrap();
        assert!((v - (1.0 - 2f64.sqrt())).abs() < 1e-15);
        let g = BernsteinFunction::gamma(2.0).unwrap();
        assert!((g.eval_extended(1.0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!(matches!(
            BernsteinFunction::stable(0.5).unwrap().eval_extended(1.0),
            Err(Error::DivergentExtension { .. })
        ));
        assert!(matches!(g.eval_extended(2.0), Err(Error::DivergentExtension { .. })));
    }

    #[test]
    fn extended_by_quadrature() {
        for f in [
            BernsteinFunction::tempered_stable(0.5, 2.0).unwrap(),
            BernsteinFunction::gamma(2.0).unwrap(),
        ] {
            let c = custom_copy(&f);
            for x in [0.1, 0.5, 1.0, 1.5] {
                let a = f.eval_extended(x).unwrap();
                let b = c.eval_extended(x).unwrap();
                assert!(((a - b) / a).abs() < 1e-8, "{f:?} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn derivatives() {
        let s = BernsteinFunction::stable(0.5).unwrap();
        assert_eq!(s.derivative(1, 4.0).unwrap(), 0.25);
        let g = BernsteinFunction::gamma(1.0).unwrap();
        assert_eq!(g.derivative(2, 1.0).unwrap(), -0.25);
        let c = custom_copy(&s);
        assert!((c.derivative(1, 4.0).unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn custom_matches_closed_form_on_log_grid() {
        for f in named() {
            let c = custom_copy(&f);
            for i in 0..=24 {
                let x = 10f64.powf(-6.0 + 0.5 * i as f64);
                let a = f.eval(x).unwrap();
                let b = c.eval(x).unwrap();
                assert!(((a - b) / a).abs() < 1e-8, "{} x={x}: {a} vs {b}", f.family_name());
            }
        }
    }

    #[test]
    fn derivative_signs_alternate() {
        for f in named() {
            for n in 1..8 {
                for x in [0.01, 1.0, 50.0] {
                    let d = f.derivative(n, x).unwrap();
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    assert!(sign * d > 0.0);
                }
            }
        }
    }

    #[test]
    fn scaled_taylor_matches_derivatives() {
        for f in named() {
            let x = 0.8;
            let b = f.scaled_taylor(x, 6).unwrap();
            let mut fact = 1.0;
            for i in 1..=6 {
                fact *= i as f64;
                let want = x.powi(i as i32) * f.derivative(i, x).unwrap() / fact;
                assert!((b[i] - want).abs() < 1e-14 * want.abs().max(1.0), "{} i={i}", f.family_name());
            }
        }
    }

    #[test]
    fn complex_continuation_agrees_on_real_axis() {
        for f in named() {
            for x in [0.1, 1.0, 7.0] {
                let z = f.eval_complex(Complex64::new(x, 0.0)).unwrap();
                assert!((z.re - f.eval(x).unwrap()).abs() < 1e-14 && z.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn levy_integral_examples() {
        let s = BernsteinFunction::stable(0.5).unwrap();
        let v = s.levy_integral(|u| -(-4.0 * u).exp_m1()).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        assert_eq!(s.levy_integral(|_| 0.0).unwrap(), 0.0);
        let g = BernsteinFunction::gamma(1.0).unwrap();
        let v = g.levy_integral(|u| (-(-u).exp_m1()).powi(2)).unwrap();
        assert!((v - (2.0 * 2f64.ln() - 3f64.ln())).abs() < 1e-11);
        assert!(matches!(
            s.levy_integral(|_| 1.0),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn custom_expression_measure() {
        let m = LevyMeasure::from_expression("0.5*pow(s,-1.5)/gamma(0.5)", 0.5, None).unwrap();
        let f = BernsteinFunction::custom(m);
        assert!((f.eval(4.0).unwrap() - 2.0).abs() < 1e-10);
        assert!(LevyMeasure::from_expression("-1/s", 0.0, None).is_err());
        // ν(s) = s^{-2} is not a Lévy density.
        assert!(LevyMeasure::from_expression("pow(s,-2)", 0.99, None).is_err());
    }

    #[test]
    fn killed_nesting_adds_rates() {
        let k = BernsteinFunction::killed(
            BernsteinFunction::killed(BernsteinFunction::gamma(1.0).unwrap(), 0.5).unwrap(),
            0.25,
        )
        .unwrap();
        assert_eq!(k.kill_rate(), 0.75);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BernsteinFunction::stable(1.0).is_err());
        assert!(BernsteinFunction::tempered_stable(0.5, 0.0).is_err());
        assert!(BernsteinFunction::gamma(-1.0).is_err());
        assert!(BernsteinFunction::stable(0.5).unwrap().eval(-1.0).is_err());
    }
}
