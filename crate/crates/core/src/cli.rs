//! Command-line front end: argument parsing, command dispatch and table
//! output.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::bernstein::BernsteinFunction;
use crate::birth::{birth_master_equation_residual, survival_mass, vandermonde_residual, yule_factorial_moment, RateSchedule};
use crate::birthdeath::{
    bd_extinction, bd_extinction_with, bd_pmf, bd_pmf_with, bd_transition, extinction_time_density,
    first_jump_rate, mean_sojourn, mean_sojourn_bounds, mean_sojourn_quadrature, BDSpec,
};
use crate::config::{OutputFormat, RunConfig, StateSelection};
use crate::death::{death_extinction, death_factorial_moment, death_master_equation_residual, death_pmf_table, DeathSpec};
use crate::error::{Error, Estimate};
use crate::montecarlo::{estimate_subordinated_pmf, SimulationOptions, SimulationReport, Verdict};
use crate::numerics::{mittag_leffler, richardson_derivative};
use crate::process::{Family, ProcessSpec};
use crate::table::Moment;

#[derive(Debug, Parser)]
#[command(name = "subpop", version, about = "Laws of subordinated birth, death and birth-death processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Largest acceptable absolute error bound of an emitted value.
    #[arg(long, global = true)]
    pub tol_abs: Option<f64>,
    /// Largest acceptable relative error bound of an emitted value.
    #[arg(long, global = true)]
    pub tol_rel: Option<f64>,
    /// Monte Carlo worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// State probabilities on a (t, k) grid.
    Pmf,
    /// Probability of being at 0.
    Extinction,
    /// Factorial moments.
    Moments,
    /// Mean sojourn times (equal-rate birth-death).
    Sojourn,
    /// Explosion probability of birth processes.
    Explode,
    /// Monte Carlo check of the pmf.
    Simulate,
    /// Invariant suite.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Pmf => "pmf",
            Command::Extinction => "extinction",
            Command::Moments => "moments",
            Command::Sojourn => "sojourn",
            Command::Explode => "explode",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
        }
    }
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// A failed command with its exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(op: &str, msg: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: format!("{op}: {msg}"),
        }
    }

    fn from_lib(op: &str, e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_)
            | Error::PreconditionViolation(_)
            | Error::UnsupportedFamily(_)
            | Error::UnsupportedOrder { .. }
            | Error::Expression(_)
            | Error::DegenerateRates { .. } => EXIT_CONFIG,
            Error::QuadratureFailure { .. }
            | Error::DivergentExtension { .. }
            | Error::TruncationFailure { .. }
            | Error::InversionFailure(_)
            | Error::GridTooCoarse { .. } => EXIT_NUMERIC,
        };
        CliError {
            code,
            message: format!("{op}: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

/// Formats a float with 17 significant digits.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Column-named rows, rendered as CSV or as a JSON array of objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_number(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(s) => s.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (name, c) in self.columns.iter().zip(row) {
                    let v = match c {
                        Cell::Num(v) if v.is_finite() => Value::from(*v),
                        Cell::Num(v) => Value::from(format_number(*v)),
                        Cell::Int(v) => Value::from(*v),
                        Cell::Text(s) => Value::from(s.clone()),
                        Cell::Empty => Value::Null,
                    };
                    m.insert(name.to_string(), v);
                }
                Value::Object(m)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
        s.push('\n');
        s
    }
}

/// Error-bound acceptance derived from `--tol-abs` / `--tol-rel`.
#[derive(Debug, Clone, Copy)]
struct Acceptance {
    abs: Option<f64>,
    rel: Option<f64>,
}

impl Acceptance {
    fn check(&self, op: &str, what: &str, e: &Estimate) -> CliResult<()> {
        if self.abs.is_none() && self.rel.is_none() {
            return Ok(());
        }
        let allowed = self.abs.unwrap_or(0.0) + self.rel.unwrap_or(0.0) * e.value.abs();
        if e.abs_error > allowed {
            return Err(CliError {
                code: EXIT_NUMERIC,
                message: format!(
                    "{op}: error bound {:e} at {what} exceeds the requested tolerance {:e}",
                    e.abs_error, allowed
                ),
            });
        }
        Ok(())
    }
}

fn warnings(e: &Estimate) -> Cell {
    if e.warnings.is_empty() {
        Cell::Empty
    } else {
        Cell::Text(e.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(";"))
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    /// Nonzero when the command ran but a check failed.
    pub code: i32,
}

/// Parses the command line, runs it and writes the output.
pub fn run(cli: &Cli) -> CliResult<i32> {
    let op = cli.command.name();
    let config = load_config(cli)?;
    let out = execute(cli.command, config.as_ref(), cli)?;
    match &cli.out {
        Some(path) => std::fs::write(path, &out.text).map_err(|e| CliError::config(op, format!("{}: {e}", path.display())))?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.text.as_bytes())
                .map_err(|e| CliError::config(op, format!("stdout: {e}")))?;
        }
    }
    if out.code != 0 {
        eprintln!("{op}: one or more checks failed");
    }
    Ok(out.code)
}

fn load_config(cli: &Cli) -> CliResult<Option<RunConfig>> {
    let op = cli.command.name();
    let Some(path) = &cli.config else {
        if cli.command == Command::Validate {
            return Ok(None);
        }
        return Err(CliError::config(op, "--config is required"));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(op, format!("{}: {e}", path.display())))?;
    let mut c = RunConfig::from_json(&text).map_err(|e| CliError::config(op, e))?;
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(n) = cli.paths {
        c.simulation.paths = n;
    }
    if let Some(w) = cli.workers {
        c.simulation.workers = Some(w);
    }
    if let Some(f) = cli.format {
        c.output = Some(f);
    }
    if cli.tol_abs.is_some() {
        c.tolerances.abs = cli.tol_abs;
    }
    if cli.tol_rel.is_some() {
        c.tolerances.rel = cli.tol_rel;
    }
    c.validate().map_err(|e| CliError::config(op, e))?;
    Ok(Some(c))
}

/// Runs one command on an already parsed configuration.
pub fn execute(cmd: Command, config: Option<&RunConfig>, cli: &Cli) -> CliResult<Output> {
    let op = cmd.name();
    if cmd == Command::Validate {
        let format = config.and_then(|c| c.output).or(cli.format).unwrap_or_default();
        let abs = config.and_then(|c| c.tolerances.abs).or(cli.tol_abs);
        let rel = config.and_then(|c| c.tolerances.rel).or(cli.tol_rel);
        let table = validate_suite(abs, rel);
        let failed = table.rows.iter().any(|r| r.last() == Some(&Cell::Text("fail".into())));
        return Ok(Output {
            text: render(&table, format),
            code: if failed { EXIT_VALIDATION } else { 0 },
        });
    }
    let c = config.ok_or_else(|| CliError::config(op, "--config is required"))?;
    if cmd == Command::Simulate {
        return simulate(c);
    }
    let f = c.subordinator.build().map_err(|e| CliError::config(op, e))?;
    let table = match cmd {
        Command::Pmf => pmf(c, &f)?,
        Command::Extinction => extinction(c, &f)?,
        Command::Moments => moments(c, &f)?,
        Command::Sojourn => sojourn(c, &f)?,
        Command::Explode => explode(c, &f)?,
        Command::Simulate | Command::Validate => unreachable!(),
    };
    Ok(Output {
        text: render(&table, c.output.unwrap_or_default()),
        code: 0,
    })
}

fn render(table: &Table, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => table.to_json(),
    }
}

fn acceptance(c: &RunConfig) -> Acceptance {
    Acceptance {
        abs: c.tolerances.abs,
        rel: c.tolerances.rel,
    }
}

fn default_states(p: &ProcessSpec) -> Vec<u64> {
    match p.family() {
        Family::Death => (0..=p.initial() as u64).collect(),
        Family::Birth => (p.initial() as u64..=p.initial() as u64 + 20).collect(),
        Family::BirthDeath => (0..=20).collect(),
    }
}

/// (t, k) cells sorted by t then k, evaluated in parallel.
fn grid<T: Send>(
    c: &RunConfig,
    states: &[u64],
    eval: impl Fn(f64, u64) -> CliResult<T> + Sync,
) -> CliResult<Vec<(f64, u64, T)>> {
    let mut times: Vec<f64> = c.times.iter().map(|t| t.0).collect();
    times.sort_by(f64::total_cmp);
    let mut ks = states.to_vec();
    ks.sort_unstable();
    let cells: Vec<(f64, u64)> = times.iter().flat_map(|&t| ks.iter().map(move |&k| (t, k))).collect();
    cells.par_iter().map(|&(t, k)| eval(t, k).map(|v| (t, k, v))).collect()
}

fn pmf(c: &RunConfig, f: &BernsteinFunction) -> CliResult<Table> {
    let op = "pmf";
    let states = c.states.as_ref().map_or_else(|| default_states(&c.process), StateSelection::states);
    let acc = acceptance(c);
    let bd = c.process.bd_spec().ok();
    let cells = grid(c, &states, |t, k| {
        let e = match (&bd, &c.tolerances.series) {
            (Some(spec), Some(trunc)) => bd_pmf_with(spec, f, t, k as usize, trunc),
            _ => c.process.pmf(f, t, k as usize),
        }
        .map_err(|e| CliError::from_lib(op, e))?;
        acc.check(op, &format!("t={t}, k={k}"), &e)?;
        Ok(e)
    })?;
    let mut table = Table::new(&["t", "k", "probability", "abs_error_bound", "warnings"]);
    for (t, k, e) in cells {
        table.rows.push(vec![Cell::Num(t), Cell::Int(k), Cell::Num(e.value), Cell::Num(e.abs_error), warnings(&e)]);
    }
    Ok(table)
}

fn extinction(c: &RunConfig, f: &BernsteinFunction) -> CliResult<Table> {
    let op = "extinction";
    if c.process.family() == Family::Birth {
        return Err(CliError::config(op, "birth processes never reach 0"));
    }
    let acc = acceptance(c);
    let cells = grid(c, &[0], |t, _| {
        let e = match (c.process.bd_spec(), &c.tolerances.series) {
            (Ok(spec), Some(trunc)) => bd_extinction_with(&spec, f, t, trunc),
            _ => c.process.extinction(f, t),
        }
        .map_err(|e| CliError::from_lib(op, e))?;
        acc.check(op, &format!("t={t}"), &e)?;
        Ok(e)
    })?;
    let mut table = Table::new(&["t", "probability", "abs_error_bound", "warnings"]);
    for (t, _, e) in cells {
        table.rows.push(vec![Cell::Num(t), Cell::Num(e.value), Cell::Num(e.abs_error), warnings(&e)]);
    }
    Ok(table)
}

fn moments(c: &RunConfig, f: &BernsteinFunction) -> CliResult<Table> {
    let op = "moments";
    let orders: Vec<u64> = c.orders.clone().unwrap_or_else(|| vec![1, 2]).into_iter().map(|r| r as u64).collect();
    let cells = grid(c, &orders, |t, r| {
        let r = r as usize;
        let m = match &c.process {
            ProcessSpec::Yule { lambda, initial: 1 } => yule_factorial_moment(*lambda, f, t, r),
            ProcessSpec::LinearDeath { .. } | ProcessSpec::SublinearDeath { .. } => c
                .process
                .death_spec()
                .and_then(|s| death_factorial_moment(&s, f, t, r))
                .map(Moment::Finite),
            p => Err(Error::UnsupportedFamily(format!(
                "factorial moments are available for the Yule process from one individual and the linear death process, not {}",
                p.name()
            ))),
        };
        m.map_err(|e| CliError::from_lib(op, e))
    })?;
    let mut table = Table::new(&["t", "order", "status", "value"]);
    for (t, r, m) in cells {
        let (status, value) = match m {
            Moment::Finite(v) => ("FINITE", Cell::Num(v)),
            Moment::Infinite => ("INFINITE", Cell::Empty),
        };
        table.rows.push(vec![Cell::Num(t), Cell::Int(r), Cell::Text(status.into()), value]);
    }
    Ok(table)
}

fn sojourn(c: &RunConfig, f: &BernsteinFunction) -> CliResult<Table> {
    let op = "sojourn";
    let lambda = match &c.process {
        ProcessSpec::BirthDeath { lambda, mu, .. } if lambda == mu => *lambda,
        _ => return Err(CliError::config(op, "sojourn times need a birth-death process with equal rates")),
    };
    let states = c.states.as_ref().map_or_else(|| (1..=10).collect(), StateSelection::states);
    let acc = acceptance(c);
    let cells = grid(c, &states, |t, k| {
        let e = mean_sojourn(lambda, f, t, k as usize).map_err(|e| CliError::from_lib(op, e))?;
        acc.check(op, &format!("t={t}, k={k}"), &e)?;
        Ok(e)
    })?;
    let mut table = Table::new(&["k", "t", "mean", "lower_bound", "upper_bound", "abs_error_bound", "warnings"]);
    for (t, k, e) in cells {
        let bounds = if t.is_infinite() { mean_sojourn_bounds(lambda, f, k as usize) } else { None };
        let (lo, hi) = bounds.map_or((Cell::Empty, Cell::Empty), |(l, h)| (Cell::Num(l), Cell::Num(h)));
        table.rows.push(vec![Cell::Int(k), Cell::Num(t), Cell::Num(e.value), lo, hi, Cell::Num(e.abs_error), warnings(&e)]);
    }
    Ok(table)
}

fn explode(c: &RunConfig, f: &BernsteinFunction) -> CliResult<Table> {
    let op = "explode";
    if c.process.family() != Family::Birth {
        return Err(CliError::config(op, "explosion is defined for birth processes"));
    }
    if c.process.initial() != 1 {
        return Err(CliError::config(op, "explosion probabilities are computed from one individual"));
    }
    let rates = c.process.schedule().map_err(|e| CliError::config(op, e))?;
    let cells = grid(c, &[1], |t, _| {
        survival_mass(&rates, c.regularity.as_ref(), f, t).map_err(|e| CliError::from_lib(op, e))
    })?;
    let mut table = Table::new(&["t", "survival_mass", "explosion_probability", "regular", "truncation_bound"]);
    for (t, _, s) in cells {
        table.rows.push(vec![
            Cell::Num(t),
            Cell::Num(s.mass),
            Cell::Num(s.explosion_probability()),
            Cell::Text(s.regular.to_string()),
            s.truncation_bound.map_or(Cell::Empty, Cell::Num),
        ]);
    }
    Ok(table)
}

fn simulate(c: &RunConfig) -> CliResult<Output> {
    let op = "simulate";
    let s = &c.simulation;
    let opts = SimulationOptions {
        n_paths: s.paths,
        seed: c.seed(),
        limits: s.limits,
        workers: s.workers,
        reference_offset: s.reference_offset,
        record_wall_clock: s.record_wall_clock,
        keep_paths: s.paths_csv.is_some(),
    };
    let mut reports = Vec::with_capacity(c.times.len());
    for t in &c.times {
        let r = estimate_subordinated_pmf(&c.process, &c.subordinator, t.0, &opts).map_err(|e| CliError::from_lib(op, e))?;
        reports.push(r);
    }
    if let Some(path) = &s.paths_csv {
        let mut text = String::from("t,path,clock,outcome\n");
        for r in &reports {
            for p in &r.paths {
                let clock = p.clock.map_or_else(|| "inf".to_string(), format_number);
                let _ = writeln!(text, "{},{},{},{}", format_number(r.t), p.path, clock, p.outcome);
            }
        }
        std::fs::write(path, text).map_err(|e| CliError::config(op, format!("{path}: {e}")))?;
    }
    let failed = reports.iter().any(|r| !r.verdicts.all_pass);
    let text = match c.output.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => {
            let mut s = if reports.len() == 1 {
                serde_json::to_string_pretty(&reports[0])
            } else {
                serde_json::to_string_pretty(&reports)
            }
            .expect("report serializes");
            s.push('\n');
            s
        }
        OutputFormat::Csv => simulation_table(&reports).to_csv(),
    };
    Ok(Output {
        text,
        code: if failed { EXIT_VALIDATION } else { 0 },
    })
}

fn simulation_table(reports: &[SimulationReport]) -> Table {
    let mut table = Table::new(&["t", "state", "count", "frequency", "halfwidth", "analytic", "analytic_error", "verdict"]);
    for r in reports {
        let rows = r
            .empirical_pmf
            .iter()
            .map(|s| (s.state.to_string(), &s.row))
            .chain([("INF".to_string(), &r.infinite), ("CUTOFF".to_string(), &r.cutoff)]);
        for (state, row) in rows {
            table.rows.push(vec![
                Cell::Num(r.t),
                Cell::Text(state),
                Cell::Int(row.count),
                Cell::Num(row.frequency),
                Cell::Num(row.halfwidth),
                row.analytic.map_or(Cell::Empty, Cell::Num),
                row.analytic_error.map_or(Cell::Empty, Cell::Num),
                match row.verdict {
                    Some(Verdict::Pass) => Cell::Text("pass".into()),
                    Some(Verdict::Fail) => Cell::Text("fail".into()),
                    None => Cell::Empty,
                },
            ]);
        }
    }
    table
}

/// How an invariant's residual is compared with its threshold.
#[derive(Clone, Copy)]
enum Scale {
    Abs,
    Rel,
    /// A strict inequality margin that must stay positive; not tightened.
    Margin,
}

struct Invariant {
    name: &'static str,
    threshold: f64,
    scale: Scale,
    eval: fn() -> crate::error::Result<f64>,
}

fn stable(alpha: f64) -> BernsteinFunction {
    BernsteinFunction::stable(alpha).expect("valid index")
}

fn invariants() -> Vec<Invariant> {
    vec![
        Invariant {
            name: "vandermonde_residual",
            threshold: 1e-10,
            scale: Scale::Abs,
            eval: || {
                let mut rng = crate::montecarlo::Seed::new(1).rng(0);
                let mut worst: f64 = 0.0;
                for _ in 0..50 {
                    let rates: Vec<f64> = (0..14).map(|j| j as f64 + 0.5 + 0.4 * rng.random::<f64>()).collect();
                    let sched = RateSchedule::from_list(rates)?;
                    for r in 1..=5 {
                        for k in 1..=8 {
                            worst = worst.max(vandermonde_residual(&sched, r, k)?.value.abs());
                        }
                    }
                }
                Ok(worst)
            },
        },
        Invariant {
            name: "yule_normalization",
            threshold: 1e-6,
            scale: Scale::Abs,
            eval: || {
                let p = ProcessSpec::Yule { lambda: 1.0, initial: 1 };
                let t = p.pmf_table(&stable(0.5), 1.0, 200)?;
                Ok((t.total_mass() - 1.0).abs())
            },
        },
        Invariant {
            name: "death_normalization",
            threshold: 1e-10,
            scale: Scale::Abs,
            eval: || {
                let spec = DeathSpec::linear(1.0, 20)?;
                let t = death_pmf_table(&spec, &stable(0.5), 1.0)?;
                Ok((t.listed_mass() - 1.0).abs())
            },
        },
        Invariant {
            name: "birth_master_equation",
            threshold: 1e-6,
            scale: Scale::Abs,
            eval: || {
                let rates = RateSchedule::linear(1.0)?;
                let mut worst: f64 = 0.0;
                for t in [0.5, 1.0, 2.0] {
                    for k in 1..=4 {
                        worst = worst.max(birth_master_equation_residual(&rates, &stable(0.5), t, k, 1)?);
                    }
                }
                Ok(worst)
            },
        },
        Invariant {
            name: "death_master_equation",
            threshold: 1e-6,
            scale: Scale::Abs,
            eval: || {
                let spec = DeathSpec::linear(1.0, 5)?;
                let mut worst: f64 = 0.0;
                for t in [0.5, 1.0, 2.0] {
                    for k in 0..=5 {
                        worst = worst.max(death_master_equation_residual(&spec, &stable(0.5), t, k)?);
                    }
                }
                Ok(worst)
            },
        },
        Invariant {
            name: "death_extinction_decreasing",
            threshold: 0.0,
            scale: Scale::Margin,
            eval: || {
                let f = stable(0.5);
                let mut smallest = f64::INFINITY;
                let mut prev = death_extinction(&DeathSpec::linear(1.0, 1)?, &f, 1.0)?.value;
                for n in 2..=20 {
                    let p = death_extinction(&DeathSpec::linear(1.0, n)?, &f, 1.0)?.value;
                    smallest = smallest.min(prev - p);
                    prev = p;
                }
                Ok(smallest)
            },
        },
        Invariant {
            name: "linear_vs_sublinear_extinction",
            threshold: 1e-12,
            scale: Scale::Abs,
            eval: || {
                let f = stable(0.5);
                let mut worst: f64 = 0.0;
                for n in 1..=10 {
                    let a = death_extinction(&DeathSpec::linear(1.0, n)?, &f, 1.0)?.value;
                    let b = death_extinction(&DeathSpec::sublinear(1.0, n)?, &f, 1.0)?.value;
                    worst = worst.max((a - b).abs());
                }
                Ok(worst)
            },
        },
        Invariant {
            name: "bd_transition_reduction",
            threshold: 1e-8,
            scale: Scale::Abs,
            eval: || {
                let f = stable(0.5);
                let spec = BDSpec::new(1.0, 1.0, 1)?;
                let mut worst: f64 = 0.0;
                for t in [0.5, 1.0] {
                    for n in 0..=6 {
                        let a = bd_transition(1.0, &f, t, 1, n)?.value;
                        let b = bd_pmf(&spec, &f, t, n)?.value;
                        worst = worst.max((a - b).abs());
                    }
                }
                Ok(worst)
            },
        },
        Invariant {
            name: "extinction_time_density",
            threshold: 1e-6,
            scale: Scale::Abs,
            eval: || {
                let f = stable(0.5);
                let spec = BDSpec::new(1.0, 1.0, 1)?;
                let ext = |t: f64| bd_extinction(&spec, &f, t).map(|e| e.value).unwrap_or(f64::NAN);
                let mut worst: f64 = 0.0;
                for t in [0.5, 1.0, 2.0] {
                    let d = richardson_derivative(&ext, 1, t, 0.2 * t)?.value;
                    worst = worst.max((d - extinction_time_density(1.0, &f, t)?.value).abs());
                }
                Ok(worst)
            },
        },
        Invariant {
            name: "mittag_leffler_half",
            threshold: 1e-8,
            scale: Scale::Abs,
            eval: || {
                let mut worst: f64 = 0.0;
                for i in 0..=10 {
                    let x = 0.5 * i as f64;
                    let exact = (x * x).exp() * statrs::function::erf::erfc(x);
                    worst = worst.max((mittag_leffler(0.5, x)? - exact).abs());
                }
                Ok(worst)
            },
        },
        Invariant {
            name: "first_jump_rate",
            threshold: 1e-6,
            scale: Scale::Rel,
            eval: || {
                let mut worst: f64 = 0.0;
                for alpha in [0.3, 0.5, 0.7] {
                    for lambda in [0.5, 1.0, 2.0] {
                        let v = first_jump_rate(lambda, &stable(alpha))?.value;
                        let exact = lambda.powf(alpha) * statrs::function::gamma::gamma(alpha + 2.0);
                        worst = worst.max((v / exact - 1.0).abs());
                    }
                }
                Ok(worst)
            },
        },
        Invariant {
            name: "mean_sojourn_closed_form",
            threshold: 1e-8,
            scale: Scale::Rel,
            eval: || {
                let mut worst: f64 = 0.0;
                for alpha in [0.3, 0.5, 0.7] {
                    let f = stable(alpha);
                    for k in 1..=10 {
                        let a = mean_sojourn(1.0, &f, f64::INFINITY, k)?.value;
                        let b = mean_sojourn_quadrature(1.0, &f, f64::INFINITY, k)?.value;
                        worst = worst.max((a / b - 1.0).abs());
                    }
                }
                Ok(worst)
            },
        },
        Invariant {
            name: "killed_survival_mass",
            threshold: 1e-8,
            scale: Scale::Abs,
            eval: || {
                let rates = RateSchedule::linear(1.0)?;
                let mut worst: f64 = 0.0;
                for a in [0.5, 1.0] {
                    let f = BernsteinFunction::killed(stable(0.5), a)?;
                    for t in [0.5, 1.0, 2.0] {
                        let m = survival_mass(&rates, None, &f, t)?.mass;
                        worst = worst.max((m - (-a * t).exp()).abs());
                    }
                }
                Ok(worst)
            },
        },
    ]
}

/// Runs the invariant suite; thresholds are capped by the requested
/// tolerances.
fn validate_suite(abs: Option<f64>, rel: Option<f64>) -> Table {
    let list = invariants();
    let results: Vec<crate::error::Result<f64>> = list.par_iter().map(|inv| (inv.eval)()).collect();
    let mut table = Table::new(&["invariant", "measured", "threshold", "status"]);
    for (inv, res) in list.iter().zip(results) {
        let threshold = match inv.scale {
            Scale::Abs => abs.map_or(inv.threshold, |a| inv.threshold.min(a)),
            Scale::Rel => rel.map_or(inv.threshold, |r| inv.threshold.min(r)),
            Scale::Margin => inv.threshold,
        };
        let (measured, ok) = match res {
            Ok(v) => {
                let ok = match inv.scale {
                    Scale::Margin => v > threshold,
                    _ => v < threshold,
                };
                (v, ok)
            }
            Err(_) => (f64::NAN, false),
        };
        table.rows.push(vec![
            Cell::Text(inv.name.into()),
            Cell::Num(measured),
            Cell::Num(threshold),
            Cell::Text(if ok { "pass" } else { "fail" }.into()),
        ]);
    }
    table
}
