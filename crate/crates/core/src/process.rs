//! Serializable descriptions of the classical processes and subordinators,
//! and dispatch from a description to the matching analytic law.

use serde::{Deserialize, Serialize};

use crate::bernstein::{BernsteinFunction, LevyMeasure};
use crate::birth::{
    birth_tail, classical_birth_pmf, nonlinear_pmf, nonlinear_pmf_table, yule_pmf, RateSchedule, TableLimits,
};
use crate::birthdeath::{bd_classical_pmf, bd_extinction, bd_pmf, bd_pmf_table, BDSpec};
use crate::death::{classical_death_pmf, death_extinction, death_pmf, death_pmf_table, DeathSpec};
use crate::error::{Error, Estimate, Result};
use crate::table::DistributionTable;

fn one() -> usize {
    1
}

/// Birth rates of a general birth process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RatesConfig {
    Linear { lambda: f64 },
    Power { scale: f64, exponent: f64 },
    List { rates: Vec<f64> },
}

impl RatesConfig {
    pub fn schedule(&self) -> Result<RateSchedule> {
        match self {
            RatesConfig::Linear { lambda } => RateSchedule::linear(*lambda),
            RatesConfig::Power { scale, exponent } => RateSchedule::power(*scale, *exponent),
            RatesConfig::List { rates } => RateSchedule::from_list(rates.clone()),
        }
    }
}

/// One of the classical population processes with its initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessSpec {
    Yule {
        lambda: f64,
        #[serde(default = "one")]
        initial: usize,
    },
    Birth {
        rates: RatesConfig,
        #[serde(default = "one")]
        initial: usize,
    },
    LinearDeath {
        mu: f64,
        initial: usize,
    },
    SublinearDeath {
        mu: f64,
        initial: usize,
    },
    BirthDeath {
        lambda: f64,
        mu: f64,
        #[serde(default = "one")]
        initial: usize,
    },
}

/// What kind of state space the process lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Birth,
    Death,
    BirthDeath,
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        if self.initial() == 0 {
            return Err(Error::invalid("initial population must be at least 1"));
        }
        match self.family() {
            Family::Birth => self.schedule()?.rate(self.initial()).map(|_| ()),
            Family::Death => self.death_spec()?.validate(),
            Family::BirthDeath => self.bd_spec()?.validate(),
        }
    }

    pub fn initial(&self) -> usize {
        match self {
            ProcessSpec::Yule { initial, .. }
            | ProcessSpec::Birth { initial, .. }
            | ProcessSpec::LinearDeath { initial, .. }
            | ProcessSpec::SublinearDeath { initial, .. }
            | ProcessSpec::BirthDeath { initial, .. } => *initial,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ProcessSpec::Yule { .. } | ProcessSpec::Birth { .. } => Family::Birth,
            ProcessSpec::LinearDeath { .. } | ProcessSpec::SublinearDeath { .. } => Family::Death,
            ProcessSpec::BirthDeath { .. } => Family::BirthDeath,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProcessSpec::Yule { .. } => "yule",
            ProcessSpec::Birth { .. } => "birth",
            ProcessSpec::LinearDeath { .. } => "linear_death",
            ProcessSpec::SublinearDeath { .. } => "sublinear_death",
            ProcessSpec::BirthDeath { .. } => "birth_death",
        }
    }

    pub fn schedule(&self) -> Result<RateSchedule> {
        match self {
            ProcessSpec::Yule { lambda, .. } => RateSchedule::linear(*lambda),
            ProcessSpec::Birth { rates, .. } => rates.schedule(),
            _ => Err(Error::invalid(format!("{} is not a birth process", self.name()))),
        }
    }

    pub fn death_spec(&self) -> Result<DeathSpec> {
        match self {
            ProcessSpec::LinearDeath { mu, initial } => Ok(DeathSpec::linear(*mu, *initial)?),
            ProcessSpec::SublinearDeath { mu, initial } => Ok(DeathSpec::sublinear(*mu, *initial)?),
            _ => Err(Error::invalid(format!("{} is not a death process", self.name()))),
        }
    }

    pub fn bd_spec(&self) -> Result<BDSpec> {
        match self {
            ProcessSpec::BirthDeath { lambda, mu, initial } => BDSpec::new(*lambda, *mu, *initial),
            _ => Err(Error::invalid(format!("{} is not a birth-death process", self.name()))),
        }
    }

    /// Pr{X(s) = k} for the classical process.
    pub fn classical_pmf(&self, s: f64, k: usize) -> Result<f64> {
        match self.family() {
            Family::Birth => classical_birth_pmf(&self.schedule()?, self.initial(), k, s),
            Family::Death => classical_death_pmf(&self.death_spec()?, s, k),
            Family::BirthDeath => bd_classical_pmf(&self.bd_spec()?, s, k),
        }
    }

    /// Pr{X^f(t) = k}.
    pub fn pmf(&self, f: &BernsteinFunction, t: f64, k: usize) -> Result<Estimate> {
        match self {
            ProcessSpec::Yule { lambda, initial: 1 } => yule_pmf(*lambda, f, t, k),
            ProcessSpec::Yule { .. } | ProcessSpec::Birth { .. } => {
                nonlinear_pmf(&self.schedule()?, f, t, self.initial(), k)
            }
            ProcessSpec::LinearDeath { .. } | ProcessSpec::SublinearDeath { .. } => {
                death_pmf(&self.death_spec()?, f, t, k)
            }
            ProcessSpec::BirthDeath { .. } => bd_pmf(&self.bd_spec()?, f, t, k),
        }
    }

    /// Pmf table; `max_state` bounds the listed states of the unbounded
    /// families.
    pub fn pmf_table(&self, f: &BernsteinFunction, t: f64, max_state: usize) -> Result<DistributionTable> {
        match self.family() {
            Family::Birth => {
                let limits = TableLimits {
                    max_states: (max_state + 1).saturating_sub(self.initial()).max(1),
                    ..TableLimits::default()
                };
                nonlinear_pmf_table(&self.schedule()?, f, t, self.initial(), &limits)
            }
            Family::Death => death_pmf_table(&self.death_spec()?, f, t),
            Family::BirthDeath => bd_pmf_table(&self.bd_spec()?, f, t, max_state),
        }
    }

    /// Pr{X^f(t) > k} restricted to finite states (birth processes only).
    pub fn birth_tail(&self, f: &BernsteinFunction, t: f64, k: usize) -> Result<Estimate> {
        birth_tail(&self.schedule()?, f, t, self.initial(), k)
    }

    /// Pr{X^f(t) = 0}.
    pub fn extinction(&self, f: &BernsteinFunction, t: f64) -> Result<Estimate> {
        match self.family() {
            Family::Birth => Ok(Estimate::exact(0.0)),
            Family::Death => death_extinction(&self.death_spec()?, f, t),
            Family::BirthDeath => bd_extinction(&self.bd_spec()?, f, t),
        }
    }

    /// Probability that the classical process is at 0 "after infinite time",
    /// i.e. the fate of a path whose clock has been killed.
    pub fn absorbed_at_infinity(&self) -> f64 {
        match self {
            ProcessSpec::Yule { .. } | ProcessSpec::Birth { .. } => 0.0,
            ProcessSpec::LinearDeath { .. } | ProcessSpec::SublinearDeath { .. } => 1.0,
            ProcessSpec::BirthDeath { lambda, mu, initial } => (mu / lambda).min(1.0).powi(*initial as i32),
        }
    }

    /// Total jump rate of the classical process in state r.
    pub fn classical_jump_rate(&self, r: usize) -> Result<f64> {
        match self {
            ProcessSpec::Yule { .. } | ProcessSpec::Birth { .. } => self.schedule()?.rate(r),
            ProcessSpec::LinearDeath { mu, .. } => Ok(mu * r as f64),
            ProcessSpec::SublinearDeath { mu, initial } => {
                if r > *initial {
                    return Err(Error::invalid("state exceeds the initial population"));
                }
                Ok(mu * (initial - r + 1) as f64)
            }
            ProcessSpec::BirthDeath { lambda, mu, .. } => Ok((lambda + mu) * r as f64),
        }
    }
}

/// Serializable description of a Bernstein function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubordinatorConfig {
    Stable {
        alpha: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        kill_rate: f64,
    },
    TemperedStable {
        alpha: f64,
        theta: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        kill_rate: f64,
    },
    Gamma {
        rate: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        kill_rate: f64,
    },
    /// Lévy density given as an expression in `s`.
    Custom {
        density: String,
        singularity_order: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exponential_tail_rate: Option<f64>,
        #[serde(default, skip_serializing_if = "is_zero")]
        kill_rate: f64,
    },
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl SubordinatorConfig {
    pub fn stable(alpha: f64) -> Self {
        SubordinatorConfig::Stable { alpha, kill_rate: 0.0 }
    }

    pub fn gamma(rate: f64) -> Self {
        SubordinatorConfig::Gamma { rate, kill_rate: 0.0 }
    }

    pub fn kill_rate(&self) -> f64 {
        match self {
            SubordinatorConfig::Stable { kill_rate, .. }
            | SubordinatorConfig::TemperedStable { kill_rate, .. }
            | SubordinatorConfig::Gamma { kill_rate, .. }
            | SubordinatorConfig::Custom { kill_rate, .. } => *kill_rate,
        }
    }

    pub fn with_kill_rate(mut self, rate: f64) -> Self {
        match &mut self {
            SubordinatorConfig::Stable { kill_rate, .. }
            | SubordinatorConfig::TemperedStable { kill_rate, .. }
            | SubordinatorConfig::Gamma { kill_rate, .. }
            | SubordinatorConfig::Custom { kill_rate, .. } => *kill_rate = rate,
        }
        self
    }

    pub fn build(&self) -> Result<BernsteinFunction> {
        let base = match self {
            SubordinatorConfig::Stable { alpha, .. } => BernsteinFunction::stable(*alpha)?,
            SubordinatorConfig::TemperedStable { alpha, theta, .. } => BernsteinFunction::tempered_stable(*alpha, *theta)?,
            SubordinatorConfig::Gamma { rate, .. } => BernsteinFunction::gamma(*rate)?,
            SubordinatorConfig::Custom {
                density,
                singularity_order,
                exponential_tail_rate,
                ..
            } => BernsteinFunction::custom(LevyMeasure::from_expression(
                density,
                *singularity_order,
                *exponential_tail_rate,
            )?),
        };
        let kill = self.kill_rate();
        if kill > 0.0 {
            BernsteinFunction::killed(base, kill)
        } else if kill == 0.0 {
            Ok(base)
        } else {
            Err(Error::invalid(format!("kill rate {kill} must be nonnegative")))
        }
    }
}
