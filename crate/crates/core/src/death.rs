//! Linear and sublinear death processes time-changed by a subordinator.

use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinFunction;
use crate::differences::binomial_decay_sum;
use crate::error::{Error, Estimate, Result};
use crate::numerics::{binomial, richardson_derivative, QuadratureSpec};
use crate::table::{DistributionTable, TableEntry};

/// Population size above which the alternating sums are expected to lose
/// accuracy; results still carry their own error estimate.
pub const ADVISED_MAX_POPULATION: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeathVariant {
    /// Each of the k survivors dies at rate μ.
    Linear,
    /// Deaths occur at rate μ·(number of deaths so far + 1).
    Sublinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeathSpec {
    pub mu: f64,
    pub initial: usize,
    pub variant: DeathVariant,
}

impl DeathSpec {
    pub fn new(mu: f64, initial: usize, variant: DeathVariant) -> Result<Self> {
        let s = DeathSpec { mu, initial, variant };
        s.validate()?;
        Ok(s)
    }

    pub fn linear(mu: f64, initial: usize) -> Result<Self> {
        Self::new(mu, initial, DeathVariant::Linear)
    }

    pub fn sublinear(mu: f64, initial: usize) -> Result<Self> {
        Self::new(mu, initial, DeathVariant::Sublinear)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!("death rate {} must be positive", self.mu)));
        }
        if self.initial == 0 {
            return Err(Error::invalid("initial population must be at least 1"));
        }
        Ok(())
    }

    fn require_linear(&self) -> Result<()> {
        match self.variant {
            DeathVariant::Linear => Ok(()),
            DeathVariant::Sublinear => Err(Error::invalid("operation is defined for the linear variant only")),
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("time {t} must be finite and nonnegative")))
    }
}

/// Classical (unsubordinated) law at time s.
pub fn classical_death_pmf(spec: &DeathSpec, s: f64, k: usize) -> Result<f64> {
    spec.validate()?;
    check_time(s)?;
    let n0 = spec.initial;
    if k > n0 {
        return Ok(0.0);
    }
    let p = (-spec.mu * s).exp();
    let q = -(-spec.mu * s).exp_m1();
    Ok(match spec.variant {
        DeathVariant::Linear => {
            let (c, _) = binomial(n0 as u64, k as u64);
            c * p.powi(k as i32) * q.powi((n0 - k) as i32)
        }
        DeathVariant::Sublinear if k == 0 => q.powi(n0 as i32),
        DeathVariant::Sublinear => p * q.powi((n0 - k) as i32),
    })
}

/// Pr{M^f(t) = k | M^f(0) = n0}.
pub fn death_pmf(spec: &DeathSpec, f: &BernsteinFunction, t: f64, k: usize) -> Result<Estimate> {
    spec.validate()?;
    check_time(t)?;
    let n0 = spec.initial;
    if k > n0 {
        return Err(Error::invalid(format!("state {k} exceeds the initial population {n0}")));
    }
    if t == 0.0 {
        return Ok(Estimate::exact(if k == n0 { 1.0 } else { 0.0 }));
    }
    if k == 0 {
        return death_extinction(spec, f, t);
    }
    let mut e = match spec.variant {
        DeathVariant::Linear => {
            let (c, _) = binomial(n0 as u64, k as u64);
            binomial_decay_sum(f, t, n0 - k, spec.mu * k as f64, spec.mu)?.scaled(c)
        }
        DeathVariant::Sublinear => binomial_decay_sum(f, t, n0 - k, spec.mu, spec.mu)?,
    };
    e.value = e.value.clamp(0.0, 1.0);
    Ok(e)
}

/// Pr{M^f(t) = 0 | M^f(0) = n0}; the same for both variants.
pub fn death_extinction(spec: &DeathSpec, f: &BernsteinFunction, t: f64) -> Result<Estimate> {
    spec.validate()?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    // 1 + Σ_{j≥1} C(n0,j)(−1)^j e^{−t f(μj)}; the j = 0 term of the shared
    // sum is e^{−t f(0)} = e^{−at}, so the killed mass is added separately.
    let mut e = binomial_decay_sum(f, t, spec.initial, 0.0, spec.mu)?;
    e.value -= (-f.kill_rate() * t).exp_m1();
    e.value = e.value.clamp(0.0, 1.0);
    Ok(e)
}

/// Pr{M^f(t) > 0 | M^f(0) = n0}, summed directly so that it keeps relative
/// accuracy when extinction is nearly certain.
pub fn death_survival(spec: &DeathSpec, f: &BernsteinFunction, t: f64) -> Result<Estimate> {
    spec.validate()?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(Estimate::exact(1.0));
    }
    // Σ_{j≥1} C(n0,j)(−1)^{j+1} e^{−t f(μj)} = n0 Σ_i C(n0−1,i)(−1)^i e^{−t f(μ(i+1))}/(i+1),
    // minus the killed mass which never reaches a finite state.
    let n0 = spec.initial;
    let terms: Vec<f64> = (0..n0)
        .map(|i| Ok((-t * f.eval(spec.mu * (i + 1) as f64)?).exp() / (i + 1) as f64))
        .collect::<Result<_>>()?;
    let s = crate::numerics::alternating_binomial_sum(n0 - 1, |i| terms[i]);
    let killed = -(-f.kill_rate() * t).exp_m1();
    let value = (n0 as f64 * s.value - killed).clamp(0.0, 1.0);
    Ok(Estimate::new(value, n0 as f64 * s.abs_error).with_warning(s.warning))
}

/// Full pmf over 0..=n0.
pub fn death_pmf_table(spec: &DeathSpec, f: &BernsteinFunction, t: f64) -> Result<DistributionTable> {
    let entries = (0..=spec.initial)
        .map(|k| {
            Ok(TableEntry {
                state: k as u64,
                probability: death_pmf(spec, f, t, k)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DistributionTable {
        entries,
        tail: None,
        truncation_bound: None,
    })
}

/// E[M(M−1)…(M−r+1)] = r! C(n0, r) e^{−t f(μr)} for the linear variant.
pub fn death_factorial_moment(spec: &DeathSpec, f: &BernsteinFunction, t: f64, r: usize) -> Result<f64> {
    spec.validate()?;
    spec.require_linear()?;
    check_time(t)?;
    if r > spec.initial {
        return Ok(0.0);
    }
    let falling: f64 = (0..r).map(|i| (spec.initial - i) as f64).product();
    if r == 0 {
        return Ok(1.0);
    }
    Ok(falling * (-t * f.eval(spec.mu * r as f64)?).exp())
}

/// Variance of the linear variant.
pub fn death_variance(spec: &DeathSpec, f: &BernsteinFunction, t: f64) -> Result<f64> {
    spec.validate()?;
    spec.require_linear()?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let n = spec.initial as f64;
    let one = (-t * f.eval(spec.mu)?).exp();
    let two = (-t * f.eval(2.0 * spec.mu)?).exp();
    Ok(n * one - n * two + n * n * two - n * n * one * one)
}

/// Jump intensity r → k (k < r) of the subordinated linear death process.
pub fn death_transition_rate(spec: &DeathSpec, f: &BernsteinFunction, r: usize, k: usize) -> Result<f64> {
    spec.validate()?;
    spec.require_linear()?;
    if k >= r || r > spec.initial {
        return Err(Error::invalid(format!("transition {r} → {k} requires k < r ≤ n0")));
    }
    let mu = spec.mu;
    let (c, _) = binomial(r as u64, k as u64);
    f.levy_integral_with(
        |s| c * (-(-mu * s).exp_m1()).powi((r - k) as i32) * (-mu * k as f64 * s).exp(),
        1.0 / (mu * r as f64),
        &QuadratureSpec::default(),
    )
}

/// Residual of the three-term identity
/// (n0 − k) P(k | n0) − n0 P(k | n0 − 1) + (k + 1) P(k + 1 | n0) = 0,
/// which holds for every binomial mixture and hence after subordination.
pub fn death_recursion_check(spec: &DeathSpec, f: &BernsteinFunction, t: f64, k: usize) -> Result<f64> {
    spec.validate()?;
    spec.require_linear()?;
    let n0 = spec.initial;
    if n0 < 2 || k >= n0 {
        return Err(Error::invalid("the recursion needs n0 ≥ 2 and k < n0"));
    }
    let smaller = DeathSpec { initial: n0 - 1, ..*spec };
    let a = death_pmf(spec, f, t, k)?.value;
    let b = death_pmf(&smaller, f, t, k)?.value;
    let c = death_pmf(spec, f, t, k + 1)?.value;
    Ok((n0 - k) as f64 * a - n0 as f64 * b + (k + 1) as f64 * c)
}

/// |d/dt p_k − (−f(μk) p_k + Σ_{j>k} p_j q_{j→k})| for the linear variant.
pub fn death_master_equation_residual(spec: &DeathSpec, f: &BernsteinFunction, t: f64, k: usize) -> Result<f64> {
    spec.validate()?;
    spec.require_linear()?;
    if !(t > 0.0) {
        return Err(Error::invalid("the residual is evaluated at t > 0"));
    }
    let pmf = |s: f64| death_pmf(spec, f, s, k).map(|e| e.value).unwrap_or(f64::NAN);
    let hold = f.eval(spec.mu * k as f64)?;
    let top = f.eval(spec.mu * spec.initial as f64)?;
    let step = (0.25 * t).min(0.5 / top.max(1e-3));
    let lhs = richardson_derivative(&pmf, 1, t, step)?.value;
    let mut rhs = -hold * death_pmf(spec, f, t, k)?.value;
    for j in k + 1..=spec.initial {
        rhs += death_pmf(spec, f, t, j)?.value * death_transition_rate(spec, f, j, k)?;
    }
    Ok((lhs - rhs).abs())
}
