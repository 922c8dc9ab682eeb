//! Linear birth-death process time-changed by a subordinator.
//!
//! Unequal rates use geometric series in e^{-t f(·)}. Equal rates use the
//! representation of every law as a λ-derivative of λ ∫ e^{-w} ψ(λw) dw:
//! writing b_i(x) = x^i ψ^{(i)}(x)/i! for the Taylor coefficients of
//! h ↦ ψ(x(1+h)), the k-th scaled derivative collapses to
//! (−1)^{k−1} ∫ e^{-w} [b_k(λw) + b_{k−1}(λw)] dw, and the coefficients come
//! from exact jet arithmetic rather than finite differences.

use std::cell::RefCell;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::bernstein::BernsteinFunction;
use crate::differences::binomial_decay_sum;
use crate::error::{Error, Estimate, Result};
use crate::numerics::laguerre::{adaptive_weighted, exp_weighted_vector, VectorIntegral};
use crate::numerics::quad::QuadValue;
use crate::numerics::talbot::Inverted;
use crate::numerics::{binomial, invert, richardson_derivative, InversionSpec, Jet, QuadratureSpec, SeriesTruncation};
use crate::table::{DistributionTable, TableEntry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BDSpec {
    pub lambda: f64,
    pub mu: f64,
    #[serde(default = "one")]
    pub initial: usize,
}

fn one() -> usize {
    1
}

impl BDSpec {
    pub fn new(lambda: f64, mu: f64, initial: usize) -> Result<Self> {
        let s = BDSpec { lambda, mu, initial };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite() && self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("birth and death rates must be positive"));
        }
        if self.initial == 0 {
            return Err(Error::invalid("initial population must be at least 1"));
        }
        Ok(())
    }

    pub fn balanced(&self) -> bool {
        self.lambda == self.mu
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("time {t} must be finite and nonnegative")))
    }
}

/// Law of a single progenitor at time s: Pr{0} = α and
/// Pr{n} = (1−α)(1−β)β^{n−1}. Returns (α, 1−α, 1−β, β), each computed
/// without cancellation.
pub(crate) fn one_progenitor(lambda: f64, mu: f64, s: f64) -> (f64, f64, f64, f64) {
    let d = lambda - mu;
    if d == 0.0 {
        let x = lambda * s;
        let p = x / (1.0 + x);
        let q = 1.0 / (1.0 + x);
        return (p, q, q, p);
    }
    if d > 0.0 {
        let e = (-d * s).exp();
        let em1 = -(-d * s).exp_m1();
        let den = lambda - mu * e;
        (mu * em1 / den, d / den, e * d / den, lambda * em1 / den)
    } else {
        let e = (d * s).exp();
        let em1 = -(d * s).exp_m1();
        let den = mu - lambda * e;
        (mu * em1 / den, -e * d / den, -d / den, lambda * em1 / den)
    }
}

/// Classical law Pr{L(s) = n | L(0) = r0}, as the r0-fold convolution of
/// the one-progenitor law (all terms nonnegative).
pub fn bd_classical_pmf(spec: &BDSpec, s: f64, n: usize) -> Result<f64> {
    spec.validate()?;
    check_time(s)?;
    let (a, qa, qb, b) = one_progenitor(spec.lambda, spec.mu, s);
    let single: Vec<f64> = (0..=n)
        .map(|m| if m == 0 { a } else { qa * qb * b.powi(m as i32 - 1) })
        .collect();
    let mut dist = single.clone();
    for _ in 1..spec.initial {
        let mut next = vec![0.0; n + 1];
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (j, &q) in single.iter().enumerate().take(n + 1 - i) {
                next[i + j] += p * q;
            }
        }
        dist = next;
    }
    Ok(dist[n].clamp(0.0, 1.0))
}

/// The integrand profile ψ whose jet is integrated.
#[derive(Debug, Clone, Copy)]
enum Profile {
    /// e^{−t f}
    Decay(f64),
    /// (1 − e^{−t f}) / f
    Occupation(f64),
    /// 1 / f
    Reciprocal,
    /// f
    Exponent,
}

fn profile_jet(f: &BernsteinFunction, x: f64, order: usize, profile: Profile) -> Result<Vec<f64>> {
    let fj = Jet::new(f.scaled_taylor(x, order)?);
    Ok(match profile {
        Profile::Decay(t) => fj.scale(-t).exp().coeffs,
        Profile::Occupation(t) => {
            let mut a = fj.scale(-t).exp();
            for c in a.coeffs.iter_mut() {
                *c = -*c;
            }
            a.coeffs[0] = -(-t * fj.coeffs[0]).exp_m1();
            a.mul(&fj.recip()).coeffs
        }
        Profile::Reciprocal => fj.recip().coeffs,
        Profile::Exponent => fj.coeffs,
    })
}

/// ∫ e^{−w} combine(b(λw)) dw componentwise, with errors from jet
/// evaluation reported as such rather than as quadrature failures.
fn jet_integrals<T: QuadValue, C: Fn(&[f64]) -> Vec<T>>(
    f: &BernsteinFunction,
    lambda: f64,
    order: usize,
    profile: Profile,
    len: usize,
    combine: C,
) -> Result<VectorIntegral<T>> {
    let failure = RefCell::new(None);
    let r = exp_weighted_vector(
        &|w: f64| match profile_jet(f, lambda * w, order, profile) {
            Ok(b) => combine(&b),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                vec![T::zero(); len]
            }
        },
        len,
        &QuadratureSpec::default(),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    r
}

fn sign(i: usize) -> f64 {
    if i % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// (−1)^{k−1} ∫ e^{−w}[b_k + b_{k−1}] for the given profile, k ≥ 1.
fn scaled_derivative(f: &BernsteinFunction, lambda: f64, k: usize, profile: Profile) -> Result<Estimate> {
    let r = jet_integrals(f, lambda, k, profile, 1, |b| vec![sign(k - 1) * (b[k] + b[k - 1])])?;
    Ok(Estimate::new(r.values[0], r.abs_errors[0]))
}

/// Pr{L^f(t) = n | L^f(0) = r0}.
pub fn bd_pmf(spec: &BDSpec, f: &BernsteinFunction, t: f64, n: usize) -> Result<Estimate> {
    bd_pmf_with(spec, f, t, n, &SeriesTruncation::default())
}

pub fn bd_pmf_with(
    spec: &BDSpec,
    f: &BernsteinFunction,
    t: f64,
    n: usize,
    trunc: &SeriesTruncation,
) -> Result<Estimate> {
    spec.validate()?;
    check_time(t)?;
    trunc.validate()?;
    if t == 0.0 {
        return Ok(Estimate::exact(if n == spec.initial { 1.0 } else { 0.0 }));
    }
    if spec.balanced() {
        if spec.initial > 1 {
            return bd_transition(spec.lambda, f, t, spec.initial, n);
        }
        if n == 0 {
            return bd_extinction(spec, f, t);
        }
        let mut e = scaled_derivative(f, spec.lambda, n, Profile::Decay(t))?;
        e.value = e.value.clamp(0.0, 1.0);
        return Ok(e);
    }
    if spec.initial > 1 {
        return Err(Error::invalid(
            "unequal rates are supported for a single progenitor only",
        ));
    }
    if n == 0 {
        return bd_extinction_with(spec, f, t, trunc);
    }
    series_pmf(spec, f, t, n, trunc)
}

fn series_pmf(spec: &BDSpec, f: &BernsteinFunction, t: f64, k: usize, trunc: &SeriesTruncation) -> Result<Estimate> {
    let (lam, mu) = (spec.lambda, spec.mu);
    let (d, rho, pref) = if lam > mu {
        (lam - mu, mu / lam, ((lam - mu) / lam).powi(2))
    } else {
        (mu - lam, lam / mu, ((mu - lam) / mu).powi(2) * (lam / mu).powi(k as i32 - 1))
    };
    let mut total = 0.0;
    let mut err = 0.0;
    let mut coef = 1.0;
    let mut warnings = Vec::new();
    for l in 0..trunc.max_terms {
        // E[e^{−d(l+1)H} (1 − e^{−dH})^{k−1}], nonincreasing in l.
        let inner = binomial_decay_sum(f, t, k - 1, d * (l + 1) as f64, d)?;
        for w in &inner.warnings {
            if !warnings.contains(w) {
                warnings.push(*w);
            }
        }
        let v = inner.value.max(0.0);
        total += coef * v;
        err += coef * inner.abs_error;
        let next = coef * (l + k + 1) as f64 / (l + 1) as f64 * rho;
        let q = (l + k + 2) as f64 / (l + 2) as f64 * rho;
        if l + 1 >= trunc.min_terms && q < 1.0 {
            let bound = next * v / (1.0 - q);
            if bound <= trunc.epsilon * total.abs() || bound < 1e-300 {
                err += bound;
                let mut e = Estimate::new((pref * total).clamp(0.0, 1.0), pref * err);
                e.warnings = warnings;
                return Ok(e);
            }
        }
        coef = next;
        if !coef.is_finite() {
            break;
        }
    }
    Err(Error::TruncationFailure {
        terms: trunc.max_terms,
        last_term: coef,
    })
}

/// Pr{L^f(t) = 0 | L^f(0) = 1}.
pub fn bd_extinction(spec: &BDSpec, f: &BernsteinFunction, t: f64) -> Result<Estimate> {
    bd_extinction_with(spec, f, t, &SeriesTruncation::default())
}

pub fn bd_extinction_with(spec: &BDSpec, f: &BernsteinFunction, t: f64, trunc: &SeriesTruncation) -> Result<Estimate> {
    spec.validate()?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(Estimate::exact(if spec.initial == 0 { 1.0 } else { 0.0 }));
    }
    if spec.initial > 1 {
        if spec.balanced() {
            return bd_transition(spec.lambda, f, t, spec.initial, 0);
        }
        return Err(Error::invalid("unequal rates are supported for a single progenitor only"));
    }
    if spec.balanced() {
        let r = jet_integrals(f, spec.lambda, 0, Profile::Decay(t), 1, |b| vec![b[0]])?;
        return Ok(Estimate::new((1.0 - r.values[0]).clamp(0.0, 1.0), r.abs_errors[0]));
    }
    let (lam, mu) = (spec.lambda, spec.mu);
    let d = (lam - mu).abs();
    let rho = if lam > mu { mu / lam } else { lam / mu };
    // S = Σ_{m≥1} ρ^m e^{−t f(d m)}; terms decrease, tail ≤ term·ρ/(1−ρ).
    let mut s = 0.0;
    let mut pw = 1.0;
    let mut done = None;
    for m in 1..=trunc.max_terms {
        pw *= rho;
        let term = pw * (-t * f.eval(d * m as f64)?).exp();
        s += term;
        let bound = term * rho / (1.0 - rho);
        if m >= trunc.min_terms && (bound <= trunc.epsilon * s || bound < 1e-300) {
            done = Some(bound);
            break;
        }
    }
    let Some(bound) = done else {
        return Err(Error::TruncationFailure {
            terms: trunc.max_terms,
            last_term: pw,
        });
    };
    let c = (lam - mu).abs() / lam;
    let v = if lam > mu { mu / lam - c * s } else { 1.0 - c * s };
    Ok(Estimate::new(
        v.clamp(0.0, 1.0),
        c * (bound + 4.0 * f64::EPSILON * s) + f64::EPSILON,
    ))
}

/// Pmf over 0..=max_state with the remaining mass as the tail.
pub fn bd_pmf_table(spec: &BDSpec, f: &BernsteinFunction, t: f64, max_state: usize) -> Result<DistributionTable> {
    spec.validate()?;
    check_time(t)?;
    if spec.balanced() && spec.initial == 1 && t > 0.0 {
        // One pass: extinction, each state, and the exact tail
        // Pr{L^f(t) > K} = (−1)^K ∫ e^{−w} b_K.
        let k = max_state.max(1);
        let r = jet_integrals(f, spec.lambda, k, Profile::Decay(t), k + 2, |b| {
            let mut v = Vec::with_capacity(k + 2);
            v.push(1.0 - b[0]);
            for n in 1..=k {
                v.push(sign(n - 1) * (b[n] + b[n - 1]));
            }
            v.push(sign(k) * b[k]);
            v
        })?;
        let entries = (0..=max_state)
            .map(|n| TableEntry {
                state: n as u64,
                probability: Estimate::new(r.values[n].clamp(0.0, 1.0), r.abs_errors[n]),
            })
            .collect();
        let tail_state = max_state.max(1);
        let mut tail = Estimate::new(r.values[k + 1].max(0.0), r.abs_errors[k + 1]);
        if max_state == 0 {
            tail.value += r.values[1].max(0.0);
            tail.abs_error += r.abs_errors[1];
        }
        let _ = tail_state;
        return Ok(DistributionTable {
            entries,
            tail: Some(tail),
            truncation_bound: None,
        });
    }
    let entries: Vec<TableEntry> = (0..=max_state)
        .map(|n| {
            Ok(TableEntry {
                state: n as u64,
                probability: bd_pmf(spec, f, t, n)?,
            })
        })
        .collect::<Result<_>>()?;
    let listed: f64 = entries.iter().map(|e| e.probability.value).sum();
    let err: f64 = entries.iter().map(|e| e.probability.abs_error).sum();
    Ok(DistributionTable {
        entries,
        tail: Some(Estimate::new((1.0 - listed).max(0.0), err + 1e-15)),
        truncation_bound: None,
    })
}

/// Density of the extinction time for equal rates:
/// ∫ e^{−w} f(λw) e^{−t f(λw)} dw.
pub fn extinction_time_density(lambda: f64, f: &BernsteinFunction, t: f64) -> Result<Estimate> {
    if !(t > 0.0 && lambda > 0.0) {
        return Err(Error::invalid("density needs t > 0 and λ > 0"));
    }
    let r = jet_integrals(f, lambda, 0, Profile::Exponent, 1, |b| vec![b[0] * (-t * b[0]).exp()])?;
    Ok(Estimate::new(r.values[0], r.abs_errors[0]))
}

/// The same density by the scalar adaptive integrator; used as an
/// independent check.
pub fn extinction_time_density_adaptive(lambda: f64, f: &BernsteinFunction, t: f64) -> Result<Estimate> {
    let failure = RefCell::new(None);
    let r = adaptive_weighted(
        &|w: f64| match f.eval(lambda * w) {
            Ok(v) => v * (-t * v).exp(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        &QuadratureSpec::default().tightened(1e-2),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let r = r?;
    Ok(Estimate::new(r.value, r.abs_error))
}

/// Coefficients a_m with Pr{L(s) = n | L(0) = r} = Σ_m a_m (λs/(1+λs))^m
/// for equal rates; m runs over 0..=r+n.
fn transition_coefficients(r: usize, n: usize) -> Vec<f64> {
    let mut a = vec![0.0; r + n + 1];
    for j in 0..=r.min(n) {
        let (c1, _) = binomial(r as u64, j as u64);
        let (c2, _) = binomial((r + n - j - 1) as u64, (r - 1) as u64);
        for k in 0..=j {
            let (c3, _) = binomial(j as u64, k as u64);
            a[r + n - 2 * j + k] += c1 * c2 * c3 * (-2.0f64).powi(k as i32);
        }
    }
    a
}

/// Pr{L^f(t0 + t) = n | L^f(t0) = r} for equal rates, through the moments
/// M_m(t) = E[(λH/(1+λH))^m] = ∫ e^{−w}[1 − Σ_{i<m} (−1)^i b_i] dw.
pub fn bd_transition(lambda: f64, f: &BernsteinFunction, t: f64, r: usize, n: usize) -> Result<Estimate> {
    check_time(t)?;
    if !(lambda > 0.0) || r == 0 {
        return Err(Error::invalid("need λ > 0 and r ≥ 1"));
    }
    if t == 0.0 {
        return Ok(Estimate::exact(if n == r { 1.0 } else { 0.0 }));
    }
    let a = transition_coefficients(r, n);
    let top = r + n;
    let m = jet_integrals(f, lambda, top, Profile::Decay(t), top + 1, |b| {
        let mut v = Vec::with_capacity(top + 1);
        let mut partial = 0.0;
        for m in 0..=top {
            v.push(1.0 - partial);
            partial += sign(m) * b[m];
        }
        v
    })?;
    let mut value = 0.0;
    let mut err = 0.0;
    for (i, &c) in a.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let (mv, me) = if i == 0 { (1.0, 0.0) } else { (m.values[i], m.abs_errors[i]) };
        value += c * mv;
        err += c.abs() * (me + 2.0 * f64::EPSILON * mv.abs());
    }
    Ok(Estimate::new(value.clamp(0.0, 1.0), err))
}

/// Jump intensity r → n: ∫ Pr{L(s) = n | L(0) = r} ν(ds), with r taken from
/// `spec.initial`.
pub fn bd_infinitesimal_rate(spec: &BDSpec, f: &BernsteinFunction, n: usize) -> Result<f64> {
    spec.validate()?;
    if n == spec.initial {
        return Err(Error::invalid("the jump intensity is defined for n ≠ r"));
    }
    let scale = 1.0 / ((spec.lambda + spec.mu) * spec.initial as f64);
    f.levy_integral_with(
        |s| bd_classical_pmf(spec, s, n).unwrap_or(f64::NAN),
        scale,
        &QuadratureSpec::default(),
    )
}

/// Rate of the exponential first-jump time from state 1 (equal rates):
/// d/dλ [λ ∫ e^{−w} f(λw) dw], differentiated under the integral.
pub fn first_jump_rate(lambda: f64, f: &BernsteinFunction) -> Result<Estimate> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("λ must be positive"));
    }
    let r = jet_integrals(f, lambda, 1, Profile::Exponent, 1, |b| vec![b[0] + b[1]])?;
    Ok(Estimate::new(r.values[0], r.abs_errors[0]))
}

/// The same rate by Richardson extrapolation of a numerical λ-derivative.
pub fn first_jump_rate_by_difference(lambda: f64, f: &BernsteinFunction) -> Result<Estimate> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("λ must be positive"));
    }
    let failure = RefCell::new(None);
    let outer = |l: f64| -> f64 {
        let r = jet_integrals(f, l, 0, Profile::Exponent, 1, |b| vec![b[0]]);
        match r {
            Ok(v) => l * v.values[0],
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let d = richardson_derivative(&outer, 1, lambda, 0.25 * lambda);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let d = d?;
    Ok(Estimate::new(d.value, d.abs_error))
}

/// Mean sojourn time in state k up to t for the classical process with
/// equal rates; t may be infinite.
pub fn classical_mean_sojourn(lambda: f64, t: f64, k: usize) -> Result<f64> {
    if !(lambda > 0.0) || k == 0 || !(t >= 0.0) {
        return Err(Error::invalid("need λ > 0, k ≥ 1, t ≥ 0"));
    }
    let frac = if t.is_infinite() { 1.0 } else { lambda * t / (1.0 + lambda * t) };
    Ok(frac.powi(k as i32) / (lambda * k as f64))
}

/// E V_k^f(t), the mean time spent in state k up to t (t may be infinite),
/// for equal rates and one progenitor.
pub fn mean_sojourn(lambda: f64, f: &BernsteinFunction, t: f64, k: usize) -> Result<Estimate> {
    if let (BernsteinFunction::Stable { alpha }, true) = (f, t.is_infinite()) {
        if !(lambda > 0.0) || k == 0 {
            return Err(Error::invalid("need λ > 0 and k ≥ 1"));
        }
        let a = *alpha;
        // ∫ p_k(y) y^{α−1} dy / Γ(α) with p_k the classical law, i.e.
        // B(2−α, k+α−1) / (Γ(α) λ^α).
        let log = ln_gamma(2.0 - a) + ln_gamma(a + k as f64 - 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma(a);
        let v = log.exp() * lambda.powf(-a);
        return Ok(Estimate::new(v, 16.0 * f64::EPSILON * v * (1.0 + log.abs())));
    }
    mean_sojourn_quadrature(lambda, f, t, k)
}

/// E V_k^f(t) through the jet representation, for any family.
pub fn mean_sojourn_quadrature(lambda: f64, f: &BernsteinFunction, t: f64, k: usize) -> Result<Estimate> {
    if !(lambda > 0.0) || k == 0 || !(t >= 0.0) {
        return Err(Error::invalid("need λ > 0, k ≥ 1, t ≥ 0"));
    }
    if t == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let profile = if t.is_infinite() {
        // 1/f must be integrable against e^{−w} near 0. A subordinator
        // with finite mean jump has f(x) ~ c x there, and the asymptotic
        // mean is infinite.
        let finite = f.kill_rate() > 0.0
            || match f.unkilled() {
                BernsteinFunction::Stable { .. } => true,
                BernsteinFunction::Custom(m) => m.singularity_order < 1.0 && m.singularity_order > 0.0,
                _ => false,
            };
        if !finite {
            return Err(Error::PreconditionViolation(
                "the asymptotic mean sojourn is infinite for this subordinator".into(),
            ));
        }
        Profile::Reciprocal
    } else {
        Profile::Occupation(t)
    };
    let mut e = scaled_derivative(f, lambda, k, profile)?;
    e.value = e.value.max(0.0);
    Ok(e)
}

/// Two-sided bounds on E V_k^f(∞) for the stable family from Gautschi's
/// inequality, (k−1)^{1−α} < Γ(k)/Γ(k−1+α) < k^{1−α}; None otherwise.
/// For k = 1 both sides equal the exact value.
pub fn mean_sojourn_bounds(lambda: f64, f: &BernsteinFunction, k: usize) -> Option<(f64, f64)> {
    match f {
        BernsteinFunction::Stable { alpha } if k >= 1 => {
            let c = gamma(2.0 - alpha) / (gamma(*alpha) * lambda.powf(*alpha));
            let kf = k as f64;
            if k == 1 {
                return Some((c * gamma(*alpha), c * gamma(*alpha)));
            }
            Some((c / kf.powf(2.0 - alpha), c / (kf * (kf - 1.0).powf(1.0 - alpha))))
        }
        _ => None,
    }
}

/// 1 − Pr{L(s) = k | L(0) = k} for equal rates, accurate for small s.
fn classical_leave_probability(lambda: f64, k: usize, s: f64) -> f64 {
    let x = lambda * s;
    let p = x / (1.0 + x);
    let a = transition_coefficients(k, k);
    if p < 0.25 {
        // Σ_m a_m p^m with a_0 = 1: 1 − P = −Σ_{m≥1} a_m p^m, and the
        // m ≥ 1 sum is dominated by −2kp, so it is formed directly.
        let mut acc = 0.0;
        let mut pw = 1.0;
        for &c in a.iter().skip(1) {
            pw *= p;
            acc += c * pw;
        }
        (-acc).max(0.0)
    } else {
        let spec = BDSpec {
            lambda,
            mu: lambda,
            initial: k,
        };
        1.0 - bd_classical_pmf(&spec, s, k).unwrap_or(f64::NAN)
    }
}

/// Laplace transform in t of Pr{L^f(t) = k | L^f(0) = k}, equal rates.
#[derive(Debug, Clone)]
pub struct SojournTransform {
    pub lambda: f64,
    pub k: usize,
    f: BernsteinFunction,
    coefficients: Vec<f64>,
}

impl SojournTransform {
    pub fn new(lambda: f64, f: &BernsteinFunction, k: usize) -> Result<Self> {
        if !(lambda > 0.0) || k == 0 {
            return Err(Error::invalid("need λ > 0 and k ≥ 1"));
        }
        Ok(SojournTransform {
            lambda,
            k,
            f: f.clone(),
            coefficients: transition_coefficients(k, k),
        })
    }

    /// r_k(ŝ) for complex ŝ off the negative real axis.
    ///
    /// With the moments' transforms ∫ e^{−w}[1/ŝ − Σ_{i<m} (−1)^i b_i] and
    /// b_i the jet of 1/(ŝ + f), the 1/ŝ parts cancel because the
    /// coefficients sum to Pr{L(∞) = k} = 0.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let top = 2 * self.k;
        let a = &self.coefficients;
        let failure = RefCell::new(None);
        let r = exp_weighted_vector(
            &|w: f64| -> Vec<Complex64> {
                let fj = match self.f.scaled_taylor(self.lambda * w, top) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        return vec![Complex64::new(0.0, 0.0)];
                    }
                };
                let jet = Jet::new(fj.into_iter().map(|c| Complex64::new(c, 0.0)).collect()).add_constant(s).recip();
                let mut partial = Complex64::new(0.0, 0.0);
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, &c) in a.iter().enumerate() {
                    acc -= partial * c;
                    partial += jet.coeffs[m] * sign(m);
                }
                vec![acc]
            },
            1,
            &QuadratureSpec::default(),
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(r?.values[0])
    }

    pub fn eval_real(&self, s: f64) -> Result<f64> {
        Ok(self.eval(Complex64::new(s, 0.0))?.re)
    }

    /// Exponential rate of the first departure from k (started at k).
    pub fn holding_rate(&self) -> Result<f64> {
        let (lambda, k) = (self.lambda, self.k);
        let v = self.f.levy_integral_with(
            |s| classical_leave_probability(lambda, k, s),
            1.0 / (2.0 * lambda * k as f64),
            &QuadratureSpec::default(),
        )?;
        Ok(v + self.f.kill_rate())
    }
}

/// Pr{V_k(t) = t}: the process never leaves k before t.
pub fn sojourn_atom(lambda: f64, f: &BernsteinFunction, k: usize, t: f64) -> Result<f64> {
    let q = SojournTransform::new(lambda, f, k)?.holding_rate()?;
    Ok((-q * t).exp())
}

/// Density at x ∈ (0, t) of the occupation time V_k(t) of state k for the
/// process started at k (equal rates), by Talbot inversion of
/// (1/(ŝ r_k(ŝ))) e^{−x/r_k(ŝ)} after removing the atom at x = t.
pub fn sojourn_density(
    lambda: f64,
    f: &BernsteinFunction,
    k: usize,
    t: f64,
    x: f64,
    spec: &InversionSpec,
) -> Result<Inverted> {
    if !(x > 0.0 && x < t && t.is_finite()) {
        return Err(Error::invalid(format!("density is evaluated for 0 < x < t, got x={x}, t={t}")));
    }
    let tr = SojournTransform::new(lambda, f, k)?;
    let q = tr.holding_rate()?;
    let atom = (-q * x).exp();
    // Shifting by x moves the transform of the continuous part to
    // τ = t − x, where it is an ordinary function.
    let g = |s: Complex64| -> Result<Complex64> {
        let r = tr.eval(s)?;
        Ok((s * x - x / r).exp() / (s * r) - atom)
    };
    invert(&g, t - x, spec)
}
