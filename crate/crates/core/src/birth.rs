//! Pure-birth processes time-changed by a subordinator.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bernstein::BernsteinFunction;
use crate::differences::{binomial_decay_sum, divided_decay_sum};
use crate::error::{Error, Estimate, Result};
use crate::numerics::altsum::divided_sum;
use crate::numerics::mittag_leffler::ml_kernel_integral;
use crate::numerics::{richardson_derivative, QuadratureSpec};
use crate::table::{DistributionTable, Moment, TableEntry};

type RateFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// How the birth rates λ_k are generated.
#[derive(Clone)]
pub enum RateKind {
    /// λ_k = λ k.
    Linear { lambda: f64 },
    /// λ_k = scale · k^exponent.
    Power { scale: f64, exponent: f64 },
    /// Arbitrary rates, optionally only defined up to `count`.
    General { rates: RateFn, count: Option<usize>, label: String },
}

impl fmt::Debug for RateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateKind::Linear { lambda } => write!(f, "Linear({lambda})"),
            RateKind::Power { scale, exponent } => write!(f, "Power({scale}, {exponent})"),
            RateKind::General { label, count, .. } => write!(f, "General({label}, {count:?})"),
        }
    }
}

/// Birth rates λ_1, λ_2, … of the classical process.
#[derive(Clone, Debug)]
pub struct RateSchedule {
    pub kind: RateKind,
}

/// Relative gap below which two rates are treated as coincident.
pub const MIN_RELATIVE_GAP: f64 = 1e-6;

impl RateSchedule {
    pub fn linear(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("birth rate {lambda} must be positive")));
        }
        Ok(RateSchedule {
            kind: RateKind::Linear { lambda },
        })
    }

    pub fn power(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::invalid("power schedule needs positive scale and exponent"));
        }
        Ok(RateSchedule {
            kind: RateKind::Power { scale, exponent },
        })
    }

    pub fn from_fn<F>(rates: F, label: &str) -> Self
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        RateSchedule {
            kind: RateKind::General {
                rates: Arc::new(rates),
                count: None,
                label: label.to_string(),
            },
        }
    }

    /// Rates λ_1..λ_n from a list; states beyond n are undefined.
    pub fn from_list(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::invalid("rate list is empty"));
        }
        let n = rates.len();
        let label = format!("{rates:?}");
        Ok(RateSchedule {
            kind: RateKind::General {
                rates: Arc::new(move |k| rates[k - 1]),
                count: Some(n),
                label,
            },
        })
    }

    /// λ_k for k ≥ 1.
    pub fn rate(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::invalid("rates are indexed from 1"));
        }
        let v = match &self.kind {
            RateKind::Linear { lambda } => lambda * k as f64,
            RateKind::Power { scale, exponent } => scale * (k as f64).powf(*exponent),
            RateKind::General { rates, count, .. } => {
                if let Some(n) = count {
                    if k > *n {
                        return Err(Error::invalid(format!("rate λ_{k} requested but only {n} rates given")));
                    }
                }
                rates(k)
            }
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("rate λ_{k} = {v} is not positive")));
        }
        Ok(v)
    }

    /// λ_r..=λ_k, checked for pairwise separation.
    pub fn window(&self, r: usize, k: usize) -> Result<Vec<f64>> {
        let v: Vec<f64> = (r..=k).map(|j| self.rate(j)).collect::<Result<_>>()?;
        if !matches!(self.kind, RateKind::General { .. }) {
            return Ok(v);
        }
        let scale = v.iter().cloned().fold(0.0, f64::max);
        let mut sorted: Vec<(f64, usize)> = v.iter().cloned().zip(r..).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in sorted.windows(2) {
            let gap = w[1].0 - w[0].0;
            if gap < MIN_RELATIVE_GAP * scale {
                return Err(Error::DegenerateRates {
                    i: w[0].1.min(w[1].1),
                    j: w[0].1.max(w[1].1),
                    gap,
                });
            }
        }
        Ok(v)
    }

    /// Whether Σ 1/λ_j diverges, when this can be decided from the family.
    pub fn known_regularity(&self) -> Option<bool> {
        match &self.kind {
            RateKind::Linear { .. } => Some(true),
            RateKind::Power { exponent, .. } => Some(*exponent <= 1.0),
            RateKind::General { .. } => None,
        }
    }

    /// Upper bound on Σ_{j>K} 1/λ_j, where available.
    fn reciprocal_tail(&self, k: usize) -> Option<f64> {
        match &self.kind {
            RateKind::Power { scale, exponent } if *exponent > 1.0 => {
                Some((k as f64).powf(1.0 - exponent) / ((exponent - 1.0) * scale))
            }
            _ => None,
        }
    }
}

/// A user's statement about whether Σ 1/λ_j diverges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityDeclaration {
    pub diverges: bool,
    #[serde(default)]
    pub rationale: String,
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("time {t} must be finite and nonnegative")))
    }
}

/// Pr{N(s) = k | N(0) = r} for the classical (unsubordinated) process.
pub fn classical_birth_pmf(rates: &RateSchedule, r: usize, k: usize, s: f64) -> Result<f64> {
    check_time(s)?;
    if r == 0 {
        return Err(Error::invalid("initial population must be at least 1"));
    }
    if k < r {
        return Ok(0.0);
    }
    if s == 0.0 {
        return Ok(if k == r { 1.0 } else { 0.0 });
    }
    if let RateKind::Linear { lambda } = rates.kind {
        let n = (k - r) as f64;
        let lc = ln_gamma(k as f64) - ln_gamma(r as f64) - ln_gamma(n + 1.0);
        let log_p = lc - lambda * r as f64 * s + if n > 0.0 { n * (-(-lambda * s).exp_m1()).ln() } else { 0.0 };
        return Ok(log_p.exp());
    }
    let lam = rates.window(r, k)?;
    let top = lam.iter().cloned().fold(0.0, f64::max);
    if top * s <= 1e4 {
        return Ok(uniformized(&lam, top, s));
    }
    let weights = &lam[..lam.len() - 1];
    let v = divided_sum(&lam, weights, |m| (-lam[m] * s).exp())?;
    Ok(v.value.clamp(0.0, 1.0))
}

/// Uniformisation: Σ_n Poisson(n; Λs) · Pr{embedded chain at the last state
/// after n steps}. Every term is nonnegative, so small probabilities keep
/// full relative accuracy.
fn uniformized(lam: &[f64], top: f64, s: f64) -> f64 {
    let mu = top * s;
    let last = lam.len() - 1;
    let mut v = vec![0.0; lam.len()];
    v[0] = 1.0;
    let n_max = (mu + 12.0 * mu.sqrt() + 40.0) as usize + last;
    let mut acc = 0.0;
    for n in 0..=n_max {
        if n >= last {
            let log_w = -mu + n as f64 * mu.ln() - ln_gamma(n as f64 + 1.0);
            acc += log_w.exp() * v[last];
        }
        // One step of the uniformised chain; mass leaving the last state is dropped.
        for i in (0..=last).rev() {
            let stay = 1.0 - lam[i] / top;
            let from_below = if i > 0 { v[i - 1] * lam[i - 1] / top } else { 0.0 };
            v[i] = v[i] * stay + from_below;
        }
    }
    acc.clamp(0.0, 1.0)
}

/// Pr{N^f(t) = k | N^f(0) = r}.
pub fn nonlinear_pmf(rates: &RateSchedule, f: &BernsteinFunction, t: f64, r: usize, k: usize) -> Result<Estimate> {
    check_time(t)?;
    if r == 0 {
        return Err(Error::invalid("initial population must be at least 1"));
    }
    if k < r {
        return Ok(Estimate::exact(0.0));
    }
    if k == r {
        return Ok(Estimate::exact((-t * f.eval(rates.rate(r)?)?).exp()));
    }
    let lam = rates.window(r, k)?;
    if t == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let mut e = divided_decay_sum(f, t, &lam, &lam[..lam.len() - 1], 0)?;
    e.value = e.value.max(0.0);
    Ok(e)
}

/// Pr{N^f(t) > K | N^f(0) = r}, counting only paths with a finite clock,
/// i.e. e^{-at} − E[Pr{T_{K+1} > H}; H < ∞] with the hypoexponential law of
/// the time T_{K+1} to leave state K.
pub fn birth_tail(rates: &RateSchedule, f: &BernsteinFunction, t: f64, r: usize, k_max: usize) -> Result<Estimate> {
    check_time(t)?;
    let alive = (-f.kill_rate() * t).exp();
    if k_max < r {
        return Ok(Estimate::exact(alive));
    }
    let lam = rates.window(r, k_max)?;
    let s = divided_decay_sum(f, t, &lam, &lam, 1)?;
    let mut e = Estimate::new((alive - s.value).max(0.0), s.abs_error + f64::EPSILON);
    e.warnings = s.warnings;
    Ok(e)
}

/// Truncation controls for pmf tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableLimits {
    /// Stop once this many consecutive entries fall below `epsilon`.
    pub quiet_run: usize,
    pub epsilon: f64,
    pub max_states: usize,
}

impl Default for TableLimits {
    fn default() -> Self {
        TableLimits {
            quiet_run: 50,
            epsilon: 1e-14,
            max_states: 200,
        }
    }
}

/// The pmf over r, r+1, … up to a truncation point, with the remaining
/// mass computed independently by [`birth_tail`].
pub fn nonlinear_pmf_table(
    rates: &RateSchedule,
    f: &BernsteinFunction,
    t: f64,
    r: usize,
    limits: &TableLimits,
) -> Result<DistributionTable> {
    let mut entries = Vec::new();
    let mut quiet = 0;
    let mut k = r;
    loop {
        let p = nonlinear_pmf(rates, f, t, r, k)?;
        quiet = if p.value < limits.epsilon { quiet + 1 } else { 0 };
        entries.push(TableEntry {
            state: k as u64,
            probability: p,
        });
        if quiet >= limits.quiet_run || entries.len() >= limits.max_states {
            break;
        }
        if let RateKind::General { count: Some(n), .. } = rates.kind {
            if k >= n {
                break;
            }
        }
        k += 1;
    }
    let tail = birth_tail(rates, f, t, r, k)?;
    Ok(DistributionTable {
        entries,
        tail: Some(tail),
        truncation_bound: None,
    })
}

/// Pr{N^f(t) = k | N^f(0) = 1} for linear rates λ_k = λk.
pub fn yule_pmf(lambda: f64, f: &BernsteinFunction, t: f64, k: usize) -> Result<Estimate> {
    check_time(t)?;
    if !(lambda > 0.0) {
        return Err(Error::invalid("birth rate must be positive"));
    }
    if k == 0 {
        return Ok(Estimate::exact(0.0));
    }
    if t == 0.0 {
        return Ok(Estimate::exact(if k == 1 { 1.0 } else { 0.0 }));
    }
    let mut e = binomial_decay_sum(f, t, k - 1, lambda, lambda)?;
    e.value = e.value.max(0.0);
    Ok(e)
}

/// r-th factorial moment of the subordinated Yule process started from 1.
pub fn yule_factorial_moment(lambda: f64, f: &BernsteinFunction, t: f64, r: usize) -> Result<Moment> {
    check_time(t)?;
    if r == 0 {
        return Ok(Moment::Finite(1.0));
    }
    if f.kill_rate() > 0.0 && t > 0.0 {
        return Ok(Moment::Infinite);
    }
    let f = f.unkilled();
    let mut ext = Vec::with_capacity(r);
    for m in 0..r {
        match f.eval_extended(lambda * (r - m) as f64) {
            Ok(v) => ext.push(v),
            Err(Error::DivergentExtension { .. }) => return Ok(Moment::Infinite),
            Err(e) => return Err(e),
        }
    }
    let s = crate::numerics::alternating_binomial_sum(r - 1, |m| (-t * ext[m]).exp());
    let fact: f64 = (1..=r).map(|i| i as f64).product();
    Ok(Moment::Finite(fact * s.value))
}

/// Variance of the subordinated Yule process started from 1.
pub fn yule_variance(lambda: f64, f: &BernsteinFunction, t: f64) -> Result<Moment> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(Moment::Finite(0.0));
    }
    if f.kill_rate() > 0.0 {
        return Ok(Moment::Infinite);
    }
    let f = f.unkilled();
    let (one, two) = match (f.eval_extended(lambda), f.eval_extended(2.0 * lambda)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::DivergentExtension { .. }), _) | (_, Err(Error::DivergentExtension { .. })) => {
            return Ok(Moment::Infinite)
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    Ok(Moment::Finite(
        2.0 * (-t * two).exp() - (-t * one).exp() - (-2.0 * t * one).exp(),
    ))
}

/// Rate of the exponential holding time in state r: f(λ_r).
pub fn holding_rate(rates: &RateSchedule, f: &BernsteinFunction, r: usize) -> Result<f64> {
    f.eval(rates.rate(r)?)
}

/// Jump intensity r → k: ∫ Pr{N(s) = k | N(0) = r} ν(ds).
pub fn birth_transition_rate(rates: &RateSchedule, f: &BernsteinFunction, r: usize, k: usize) -> Result<f64> {
    if k <= r {
        return Err(Error::invalid("transition rates are defined for k > r"));
    }
    let lr = rates.rate(r)?;
    rates.window(r, k)?;
    let failure = std::cell::RefCell::new(None);
    let v = f.levy_integral_with(
        |s| match classical_birth_pmf(rates, r, k, s) {
            Ok(p) => p,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        1.0 / lr,
        &QuadratureSpec::default(),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    v
}

/// Finite-state mass Pr{N^f(t) < ∞}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalMass {
    pub mass: f64,
    pub regular: bool,
    /// For non-regular schedules: number of states summed and an upper
    /// bound on the finite mass beyond them (when computable).
    pub states_summed: Option<usize>,
    pub truncation_bound: Option<f64>,
}

impl SurvivalMass {
    pub fn explosion_probability(&self) -> f64 {
        1.0 - self.mass
    }
}

/// Pr{N^f(t) < ∞ | N^f(0) = 1}.
pub fn survival_mass(
    rates: &RateSchedule,
    decl: Option<&RegularityDeclaration>,
    f: &BernsteinFunction,
    t: f64,
) -> Result<SurvivalMass> {
    check_time(t)?;
    let regular = match (rates.known_regularity(), decl) {
        (Some(known), Some(d)) if known != d.diverges => {
            return Err(Error::invalid(format!(
                "regularity declaration (diverges = {}) contradicts the rate family",
                d.diverges
            )))
        }
        (Some(known), _) => known,
        (None, Some(d)) => d.diverges,
        (None, None) => {
            return Err(Error::invalid(
                "a regularity declaration is required for general rate schedules",
            ))
        }
    };
    if regular || t == 0.0 {
        return Ok(SurvivalMass {
            mass: (-f.kill_rate() * t).exp(),
            regular,
            states_summed: None,
            truncation_bound: None,
        });
    }
    let limits = TableLimits {
        quiet_run: 20,
        epsilon: 1e-15,
        max_states: 400,
    };
    let mut mass = 0.0;
    let mut quiet = 0;
    let mut k = 1;
    loop {
        let p = nonlinear_pmf(rates, f, t, 1, k)?.value;
        mass += p;
        quiet = if p < limits.epsilon { quiet + 1 } else { 0 };
        if quiet >= limits.quiet_run || k >= limits.max_states {
            break;
        }
        if let RateKind::General { count: Some(n), .. } = rates.kind {
            if k >= n {
                break;
            }
        }
        k += 1;
    }
    // Pr{K < N(s) < ∞} ≤ sup density of T_{K+1} · E[remaining time]
    //                  ≤ min_j λ_j · Σ_{j>K} 1/λ_j, uniformly in s.
    let bound = rates.reciprocal_tail(k).map(|tail| {
        let lmin = (1..=k).filter_map(|j| rates.rate(j).ok()).fold(f64::INFINITY, f64::min);
        (lmin * tail).min(1.0)
    });
    Ok(SurvivalMass {
        mass: mass.min(1.0),
        regular,
        states_summed: Some(k),
        truncation_bound: bound,
    })
}

/// Pr{N^ν(H^f(t)) = k | start 1} for the fractional birth process with
/// index ν ∈ (0, 1].
pub fn fractional_pmf(rates: &RateSchedule, nu: f64, f: &BernsteinFunction, t: f64, k: usize) -> Result<Estimate> {
    check_time(t)?;
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::invalid(format!("fractional index {nu} must lie in (0,1]")));
    }
    if nu == 1.0 {
        return nonlinear_pmf(rates, f, t, 1, k);
    }
    if k == 0 {
        return Ok(Estimate::exact(0.0));
    }
    if t == 0.0 {
        return Ok(Estimate::exact(if k == 1 { 1.0 } else { 0.0 }));
    }
    let lam = rates.window(1, k)?;
    let spec = QuadratureSpec::default();
    let inv = 1.0 / nu;
    // E[E_ν(−λ H^ν)] with E_ν written as a Laplace mixture.
    let vals: Vec<f64> = lam
        .iter()
        .map(|&l| {
            ml_kernel_integral(
                nu,
                |u| match f.eval((u * l).powf(inv)) {
                    Ok(v) => (-t * v).exp(),
                    Err(_) => f64::NAN,
                },
                1.0 / l,
                &spec,
            )
        })
        .collect::<Result<_>>()?;
    let s = divided_sum(&lam, &lam[..lam.len() - 1], |m| vals[m])?;
    Ok(Estimate::new(s.value.max(0.0), s.abs_error + 1e-10 * s.value.abs()).with_warning(s.warning))
}

/// Vandermonde residual Σ_m 1/Π_{l≠m}(λ_l − λ_m) over λ_r..λ_{r+k}; zero
/// in exact arithmetic.
pub fn vandermonde_residual(rates: &RateSchedule, r: usize, k: usize) -> Result<Estimate> {
    if r == 0 || k == 0 {
        return Err(Error::invalid("need r ≥ 1 and k ≥ 1"));
    }
    let lam: Vec<f64> = (r..=r + k).map(|j| rates.rate(j)).collect::<Result<_>>()?;
    let s = divided_sum(&lam, &[], |_| 1.0)?;
    // The exact value is 0: flag whenever the error bound exceeds the
    // identity threshold of 1e-10.
    let mut e = Estimate::new(s.value, s.abs_error);
    if s.abs_error > 1e-10 {
        e.warnings.push(crate::error::Warning::Cancellation {
            estimated_rel_error: f64::INFINITY,
        });
    }
    Ok(e)
}

/// |d/dt p_k(t) − (−f(λ_k) p_k(t) + Σ_{r0 ≤ j < k} p_j(t) q_{j→k})|.
pub fn birth_master_equation_residual(
    rates: &RateSchedule,
    f: &BernsteinFunction,
    t: f64,
    k: usize,
    r0: usize,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("the residual is evaluated at t > 0"));
    }
    let pmf = |s: f64| nonlinear_pmf(rates, f, s, r0, k).map(|e| e.value).unwrap_or(f64::NAN);
    let hold = holding_rate(rates, f, k)?;
    let step = (0.25 * t).min(0.5 / hold.max(1e-3));
    let lhs = richardson_derivative(&pmf, 1, t, step)?.value;
    let mut rhs = -hold * nonlinear_pmf(rates, f, t, r0, k)?.value;
    for j in r0..k {
        rhs += nonlinear_pmf(rates, f, t, r0, j)?.value * birth_transition_rate(rates, f, j, k)?;
    }
    Ok((lhs - rhs).abs())
}
