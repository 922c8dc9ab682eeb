//! Python bindings: subordinators, processes and the main laws.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use subpop::birthdeath::{bd_transition, first_jump_rate, mean_sojourn, mean_sojourn_bounds};
use subpop::birth::{survival_mass, yule_factorial_moment, RegularityDeclaration};
use subpop::montecarlo::{estimate_subordinated_pmf, SimulationOptions};
use subpop::numerics::mittag_leffler as ml;
use subpop::process::{ProcessSpec, RatesConfig, SubordinatorConfig};
use subpop::table::Moment;
use subpop::{BernsteinFunction, Error, Estimate};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::QuadratureFailure { .. }
        | Error::DivergentExtension { .. }
        | Error::TruncationFailure { .. }
        | Error::InversionFailure(_)
        | Error::GridTooCoarse { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn pair(e: Estimate) -> (f64, f64) {
    (e.value, e.abs_error)
}

/// A Lévy subordinator, optionally killed.
#[pyclass(module = "subpop", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Subordinator {
    config: SubordinatorConfig,
}

impl Subordinator {
    fn build(&self) -> PyResult<BernsteinFunction> {
        self.config.build().map_err(py_err)
    }

    fn checked(config: SubordinatorConfig) -> PyResult<Self> {
        config.build().map_err(py_err)?;
        Ok(Subordinator { config })
    }
}

#[pymethods]
impl Subordinator {
    #[staticmethod]
    #[pyo3(signature = (alpha, kill_rate = 0.0))]
    fn stable(alpha: f64, kill_rate: f64) -> PyResult<Self> {
        Self::checked(SubordinatorConfig::stable(alpha).with_kill_rate(kill_rate))
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, theta, kill_rate = 0.0))]
    fn tempered_stable(alpha: f64, theta: f64, kill_rate: f64) -> PyResult<Self> {
        Self::checked(SubordinatorConfig::TemperedStable { alpha, theta, kill_rate })
    }

    #[staticmethod]
    #[pyo3(signature = (rate, kill_rate = 0.0))]
    fn gamma(rate: f64, kill_rate: f64) -> PyResult<Self> {
        Self::checked(SubordinatorConfig::gamma(rate).with_kill_rate(kill_rate))
    }

    /// Custom Lévy density given as an expression in `s`.
    #[staticmethod]
    #[pyo3(signature = (density, singularity_order, exponential_tail_rate = None, kill_rate = 0.0))]
    fn custom(density: String, singularity_order: f64, exponential_tail_rate: Option<f64>, kill_rate: f64) -> PyResult<Self> {
        Self::checked(SubordinatorConfig::Custom {
            density,
            singularity_order,
            exponential_tail_rate,
            kill_rate,
        })
    }

    /// Laplace exponent f(x).
    fn laplace_exponent(&self, x: f64) -> PyResult<f64> {
        self.build()?.eval(x).map_err(py_err)
    }

    #[getter]
    fn kill_rate(&self) -> f64 {
        self.config.kill_rate()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.config).expect("config serializes")
    }

    fn __repr__(&self) -> String {
        format!("Subordinator({})", self.to_json())
    }
}

/// A classical birth, death or birth-death process.
#[pyclass(module = "subpop", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Process {
    spec: ProcessSpec,
}

impl Process {
    fn checked(spec: ProcessSpec) -> PyResult<Self> {
        spec.validate().map_err(py_err)?;
        Ok(Process { spec })
    }
}

#[pymethods]
impl Process {
    #[staticmethod]
    #[pyo3(signature = (rate, initial = 1))]
    fn yule(rate: f64, initial: usize) -> PyResult<Self> {
        Self::checked(ProcessSpec::Yule { lambda: rate, initial })
    }

    /// Pure birth process with the listed rates λ_1, λ_2, ….
    #[staticmethod]
    #[pyo3(signature = (rates, initial = 1))]
    fn birth(rates: Vec<f64>, initial: usize) -> PyResult<Self> {
        Self::checked(ProcessSpec::Birth {
            rates: RatesConfig::List { rates },
            initial,
        })
    }

    #[staticmethod]
    fn linear_death(rate: f64, initial: usize) -> PyResult<Self> {
        Self::checked(ProcessSpec::LinearDeath { mu: rate, initial })
    }

    #[staticmethod]
    fn sublinear_death(rate: f64, initial: usize) -> PyResult<Self> {
        Self::checked(ProcessSpec::SublinearDeath { mu: rate, initial })
    }

    #[staticmethod]
    #[pyo3(signature = (birth_rate, death_rate, initial = 1))]
    fn birth_death(birth_rate: f64, death_rate: f64, initial: usize) -> PyResult<Self> {
        Self::checked(ProcessSpec::BirthDeath {
            lambda: birth_rate,
            mu: death_rate,
            initial,
        })
    }

    /// (probability, abs_error) of state k at time t.
    fn pmf(&self, sub: &Subordinator, t: f64, k: usize) -> PyResult<(f64, f64)> {
        self.spec.pmf(&sub.build()?, t, k).map(pair).map_err(py_err)
    }

    /// [(k, probability)] up to `max_state` and the independently computed
    /// remaining mass (None when unavailable).
    fn pmf_table(&self, sub: &Subordinator, t: f64, max_state: usize) -> PyResult<(Vec<(u64, f64)>, Option<f64>)> {
        let table = self.spec.pmf_table(&sub.build()?, t, max_state).map_err(py_err)?;
        let rows = table.entries.iter().map(|e| (e.state, e.probability.value)).collect();
        Ok((rows, table.tail.map(|e| e.value)))
    }

    fn extinction(&self, sub: &Subordinator, t: f64) -> PyResult<(f64, f64)> {
        self.spec.extinction(&sub.build()?, t).map(pair).map_err(py_err)
    }

    /// Monte Carlo check of the pmf; returns the report as a JSON string.
    #[pyo3(signature = (sub, t, paths, seed, workers = None))]
    fn simulate(&self, py: Python<'_>, sub: &Subordinator, t: f64, paths: usize, seed: u64, workers: Option<usize>) -> PyResult<String> {
        let mut opts = SimulationOptions::new(paths, seed);
        opts.workers = workers;
        let report = py
            .detach(|| estimate_subordinated_pmf(&self.spec, &sub.config, t, &opts))
            .map_err(py_err)?;
        Ok(serde_json::to_string(&report).expect("report serializes"))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.spec).expect("spec serializes")
    }

    fn __repr__(&self) -> String {
        format!("Process({})", self.to_json())
    }
}

/// r-th factorial moment of the Yule process from one individual; inf when
/// infinite.
fn moment_value(m: Moment) -> f64 {
    m.value().unwrap_or(f64::INFINITY)
}

#[pyfunction]
fn yule_factorial_moment_py(rate: f64, sub: &Subordinator, t: f64, order: usize) -> PyResult<f64> {
    yule_factorial_moment(rate, &sub.build()?, t, order).map(moment_value).map_err(py_err)
}

/// Mean time spent in state k up to t (t may be inf), equal rates.
#[pyfunction]
fn mean_sojourn_time(rate: f64, sub: &Subordinator, t: f64, k: usize) -> PyResult<(f64, f64)> {
    mean_sojourn(rate, &sub.build()?, t, k).map(pair).map_err(py_err)
}

/// Two-sided bounds on the t = ∞ mean sojourn (stable family only).
#[pyfunction]
fn mean_sojourn_time_bounds(rate: f64, sub: &Subordinator, k: usize) -> PyResult<Option<(f64, f64)>> {
    Ok(mean_sojourn_bounds(rate, &sub.build()?, k))
}

/// Rate of the first jump out of state 1, equal rates.
#[pyfunction]
fn first_jump(rate: f64, sub: &Subordinator) -> PyResult<(f64, f64)> {
    first_jump_rate(rate, &sub.build()?).map(pair).map_err(py_err)
}

/// Pr{X(t) = n | X(0) = r} for equal birth and death rates.
#[pyfunction]
fn transition(rate: f64, sub: &Subordinator, t: f64, r: usize, n: usize) -> PyResult<(f64, f64)> {
    bd_transition(rate, &sub.build()?, t, r, n).map(pair).map_err(py_err)
}

/// Probability that the Yule process has not exploded by t.
#[pyfunction]
fn yule_survival_mass(rate: f64, sub: &Subordinator, t: f64) -> PyResult<f64> {
    let rates = subpop::birth::RateSchedule::linear(rate).map_err(py_err)?;
    let decl = RegularityDeclaration {
        diverges: true,
        rationale: String::new(),
    };
    survival_mass(&rates, Some(&decl), &sub.build()?, t).map(|s| s.mass).map_err(py_err)
}

/// E_ν(−x).
#[pyfunction]
fn mittag_leffler(nu: f64, x: f64) -> PyResult<f64> {
    ml(nu, x).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "subpop")]
fn subpop_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Subordinator>()?;
    m.add_class::<Process>()?;
    m.add_function(wrap_pyfunction!(mean_sojourn_time, m)?)?;
    m.add_function(wrap_pyfunction!(mean_sojourn_time_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(first_jump, m)?)?;
    m.add_function(wrap_pyfunction!(transition, m)?)?;
    m.add_function(wrap_pyfunction!(yule_survival_mass, m)?)?;
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    let f = wrap_pyfunction!(yule_factorial_moment_py, m)?;
    m.add("yule_factorial_moment", f)?;
    Ok(())
}
