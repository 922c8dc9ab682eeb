//! Exact samplers for subordinators and the classical processes, and Monte
//! Carlo estimates of subordinated laws with 3σ comparisons against the
//! analytic values.
//!
//! Every path draws from its own ChaCha8 stream (the path index), so results
//! do not depend on how paths are split across workers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bernstein::BernsteinFunction;
use crate::birthdeath::one_progenitor;
use crate::error::{Error, Result};
use crate::process::{Family, ProcessSpec, SubordinatorConfig};

/// Paths per unit of parallel work.
const CHUNK: usize = 4096;

/// Seed of a simulation: identical seeds give identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seed {
    pub root: u64,
    #[serde(default)]
    pub stream_id: u64,
}

impl Seed {
    pub fn new(root: u64) -> Self {
        Seed { root, stream_id: 0 }
    }

    /// Generator for one substream (one path).
    pub fn rng(&self, substream: u64) -> ChaCha8Rng {
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&self.root.to_le_bytes());
        bytes[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(bytes);
        rng.set_stream(substream);
        rng
    }
}

/// One draw of H^f(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClockDraw {
    Finite(f64),
    Killed,
}

/// Tuning for the samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerLimits {
    /// States above this are reported in a separate cutoff bucket.
    #[serde(default = "default_k_max")]
    pub k_max: u64,
    /// Largest expected number of stable proposals per tempered draw.
    #[serde(default = "default_rejections")]
    pub max_expected_rejections: f64,
}

fn default_k_max() -> u64 {
    1_000_000
}
fn default_rejections() -> f64 {
    1e4
}

impl Default for SamplerLimits {
    fn default() -> Self {
        SamplerLimits {
            k_max: default_k_max(),
            max_expected_rejections: default_rejections(),
        }
    }
}

/// Positive stable variable with E e^{−uS} = e^{−u^α} (Kanter's construction).
fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = PI * rng.sample::<f64, _>(Open01);
    let e: f64 = rng.sample(Exp1);
    let log_a = (alpha * (alpha * u).sin().ln() + (1.0 - alpha) * ((1.0 - alpha) * u).sin().ln() - u.sin().ln())
        / (1.0 - alpha);
    ((1.0 - alpha) / alpha * (log_a - e.ln())).exp()
}

/// Draws H^f(t).
pub fn sample_subordinator<R: Rng + ?Sized>(
    f: &BernsteinFunction,
    t: f64,
    limits: &SamplerLimits,
    rng: &mut R,
) -> Result<ClockDraw> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time {t} must be finite and nonnegative")));
    }
    if t == 0.0 {
        return Ok(ClockDraw::Finite(0.0));
    }
    Ok(match f {
        BernsteinFunction::Killed { base, kill_rate } => {
            if *kill_rate > 0.0 {
                let death: f64 = rng.sample::<f64, _>(Exp1) / kill_rate;
                if death <= t {
                    return Ok(ClockDraw::Killed);
                }
            }
            return sample_subordinator(base, t, limits, rng);
        }
        BernsteinFunction::Stable { alpha } => ClockDraw::Finite(t.powf(1.0 / alpha) * standard_stable(*alpha, rng)),
        BernsteinFunction::Gamma { rate } => {
            let g = Gamma::new(t, 1.0 / rate).map_err(|e| Error::invalid(format!("gamma sampler: {e}")))?;
            ClockDraw::Finite(g.sample(rng))
        }
        BernsteinFunction::TemperedStable { alpha, theta } => {
            let expected = (t * theta.powf(*alpha)).exp();
            if expected > limits.max_expected_rejections {
                return Err(Error::UnsupportedFamily(format!(
                    "tempered stable rejection needs about {expected:.3e} proposals per draw at t = {t}"
                )));
            }
            let scale = t.powf(1.0 / alpha);
            loop {
                let x = scale * standard_stable(*alpha, rng);
                let u: f64 = rng.random();
                if u < (-theta * x).exp() {
                    break ClockDraw::Finite(x);
                }
            }
        }
        BernsteinFunction::Custom(_) => {
            return Err(Error::UnsupportedFamily("sampling a custom Lévy measure".into()));
        }
    })
}

/// Final state of a classical path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    State(u64),
    /// The state exceeded the configured cutoff.
    Cutoff,
    /// The clock was killed (H = ∞).
    Infinite,
}

/// Geometric variable on {1, 2, …} with Pr{G > n} = q^n, given ln q.
fn geometric<R: Rng + ?Sized>(ln_q: f64, rng: &mut R) -> f64 {
    if ln_q == f64::NEG_INFINITY {
        return 1.0;
    }
    if ln_q >= 0.0 {
        return f64::INFINITY;
    }
    let u: f64 = rng.sample(Open01);
    1.0 + (u.ln() / ln_q).floor()
}

fn capped(x: f64, k_max: u64) -> Outcome {
    if x.is_nan() || x > k_max as f64 {
        Outcome::Cutoff
    } else {
        Outcome::State(x as u64)
    }
}

/// State of the classical process after `duration`, drawn from the exact
/// law where one is available and by the jump chain otherwise.
pub fn sample_classical<R: Rng + ?Sized>(
    proc: &ProcessSpec,
    duration: f64,
    limits: &SamplerLimits,
    rng: &mut R,
) -> Result<Outcome> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::invalid(format!("duration {duration} must be finite and nonnegative")));
    }
    let n0 = proc.initial();
    if duration == 0.0 {
        return Ok(capped(n0 as f64, limits.k_max));
    }
    match proc {
        ProcessSpec::Yule { lambda, initial } => {
            // Each progenitor founds a geometric family with Pr{size > n} = (1 − e^{−λs})^n.
            let ln_q = (-(-lambda * duration).exp_m1()).ln();
            let mut x = 0.0;
            for _ in 0..*initial {
                x += geometric(ln_q, rng);
            }
            Ok(capped(x, limits.k_max))
        }
        ProcessSpec::LinearDeath { mu, initial } => {
            let b = Binomial::new(*initial as u64, (-mu * duration).exp())
                .map_err(|e| Error::invalid(format!("binomial sampler: {e}")))?;
            Ok(Outcome::State(b.sample(rng)))
        }
        ProcessSpec::SublinearDeath { mu, initial } => {
            // Deaths + 1 is geometric with Pr{> n} = (1 − e^{−μs})^n.
            let deaths = geometric((-(-mu * duration).exp_m1()).ln(), rng) - 1.0;
            let left = *initial as f64 - deaths;
            Ok(Outcome::State(left.max(0.0) as u64))
        }
        ProcessSpec::BirthDeath { lambda, mu, initial } => {
            let (alpha, _, _, beta) = one_progenitor(*lambda, *mu, duration);
            let ln_beta = beta.ln();
            let mut x = 0.0;
            for _ in 0..*initial {
                let u: f64 = rng.random();
                if u >= alpha {
                    x += geometric(ln_beta, rng);
                }
            }
            Ok(capped(x, limits.k_max))
        }
        ProcessSpec::Birth { .. } => sample_jump_chain(proc, duration, limits, rng),
    }
}

/// State after `duration` by simulating exponential holding times and unit
/// jumps.
pub fn sample_jump_chain<R: Rng + ?Sized>(
    proc: &ProcessSpec,
    duration: f64,
    limits: &SamplerLimits,
    rng: &mut R,
) -> Result<Outcome> {
    let schedule = match proc.family() {
        Family::Birth => Some(proc.schedule()?),
        _ => None,
    };
    let mut k = proc.initial() as u64;
    let mut clock = 0.0;
    loop {
        if k > limits.k_max {
            return Ok(Outcome::Cutoff);
        }
        let (up, down) = match proc {
            ProcessSpec::Yule { .. } | ProcessSpec::Birth { .. } => {
                (schedule.as_ref().expect("birth schedule").rate(k as usize)?, 0.0)
            }
            ProcessSpec::LinearDeath { mu, .. } => (0.0, mu * k as f64),
            ProcessSpec::SublinearDeath { mu, initial } => {
                (0.0, if k > 0 { mu * (*initial as u64 - k + 1) as f64 } else { 0.0 })
            }
            ProcessSpec::BirthDeath { lambda, mu, .. } => (lambda * k as f64, mu * k as f64),
        };
        let total = up + down;
        if total == 0.0 {
            return Ok(Outcome::State(k));
        }
        clock += rng.sample::<f64, _>(Exp1) / total;
        if clock > duration {
            return Ok(Outcome::State(k));
        }
        let u: f64 = rng.random();
        if u * total < up {
            k += 1;
        } else {
            k -= 1;
        }
    }
}

/// One path: a clock draw followed by the classical state at that time.
fn sample_path<R: Rng + ?Sized>(
    proc: &ProcessSpec,
    f: &BernsteinFunction,
    t: f64,
    limits: &SamplerLimits,
    rng: &mut R,
) -> Result<(ClockDraw, Outcome)> {
    let h = sample_subordinator(f, t, limits, rng)?;
    let out = match h {
        ClockDraw::Killed => Outcome::Infinite,
        ClockDraw::Finite(s) if !s.is_finite() => Outcome::Cutoff,
        ClockDraw::Finite(s) => sample_classical(proc, s, limits, rng)?,
    };
    Ok((h, out))
}

/// Controls of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub n_paths: usize,
    pub seed: Seed,
    pub limits: SamplerLimits,
    /// Worker threads; None uses the global pool.
    pub workers: Option<usize>,
    /// Added to every analytic reference (used to check that the verdicts
    /// can fail).
    pub reference_offset: f64,
    pub record_wall_clock: bool,
    pub keep_paths: bool,
}

impl SimulationOptions {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        SimulationOptions {
            n_paths,
            seed: Seed::new(seed),
            limits: SamplerLimits::default(),
            workers: None,
            reference_offset: 0.0,
            record_wall_clock: false,
            keep_paths: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Empirical frequency of one state or bucket with its comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub count: u64,
    pub frequency: f64,
    /// 3·√(p̂(1−p̂)/n).
    pub halfwidth: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRow {
    pub state: u64,
    #[serde(flatten)]
    pub row: FrequencyRow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictSummary {
    pub tested: usize,
    pub failed: usize,
    pub all_pass: bool,
}

/// One simulated path, kept on request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub path: u64,
    /// None when the clock was killed.
    pub clock: Option<f64>,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub process: ProcessSpec,
    pub subordinator: SubordinatorConfig,
    pub t: f64,
    pub seed: Seed,
    pub n_paths: usize,
    pub empirical_pmf: Vec<StateRow>,
    /// Paths whose clock was killed (state ∞).
    pub infinite: FrequencyRow,
    /// Paths whose state exceeded the cutoff.
    pub cutoff: FrequencyRow,
    pub cutoff_state: u64,
    pub extinction_fraction: f64,
    /// Over paths that ended in a finite listed state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    pub verdicts: VerdictSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
    #[serde(skip)]
    pub paths: Vec<PathRecord>,
}

#[derive(Default)]
struct Tally {
    states: BTreeMap<u64, u64>,
    infinite: u64,
    cutoff: u64,
    sum: u128,
    sum_sq: u128,
    paths: Vec<PathRecord>,
}

impl Tally {
    fn merge(&mut self, other: Tally) {
        for (k, c) in other.states {
            *self.states.entry(k).or_insert(0) += c;
        }
        self.infinite += other.infinite;
        self.cutoff += other.cutoff;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.paths.extend(other.paths);
    }
}

fn outcome_label(o: Outcome) -> String {
    match o {
        Outcome::State(k) => k.to_string(),
        Outcome::Cutoff => "CUTOFF".into(),
        Outcome::Infinite => "INF".into(),
    }
}

/// Runs `job` on chunks of path indices, in the configured pool, and returns
/// the per-chunk results in chunk order.
pub(crate) fn run_chunks<T: Send, F>(n: usize, workers: Option<usize>, job: F) -> Result<Vec<T>>
where
    F: Fn(std::ops::Range<usize>) -> Result<T> + Sync,
{
    let chunks: Vec<std::ops::Range<usize>> = (0..n).step_by(CHUNK).map(|a| a..(a + CHUNK).min(n)).collect();
    let run = || chunks.par_iter().map(|r| job(r.clone())).collect::<Vec<Result<T>>>();
    let results = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    results.into_iter().collect()
}

fn row(count: u64, n: usize) -> FrequencyRow {
    let p = count as f64 / n as f64;
    FrequencyRow {
        count,
        frequency: p,
        halfwidth: 3.0 * (p * (1.0 - p) / n as f64).sqrt(),
        analytic: None,
        analytic_error: None,
        verdict: None,
    }
}

/// Compares a row with its analytic value when p̂ > 10/n.
fn judge(row: &mut FrequencyRow, analytic: f64, error: f64, n: usize, offset: f64) -> Option<bool> {
    let reference = analytic + offset;
    row.analytic = Some(reference);
    row.analytic_error = Some(error);
    if row.frequency <= 10.0 / n as f64 {
        return None;
    }
    let ok = (row.frequency - reference).abs() <= row.halfwidth + error;
    row.verdict = Some(if ok { Verdict::Pass } else { Verdict::Fail });
    Some(ok)
}

/// Simulates X(H^f(t)) and compares the empirical pmf with the analytic one.
pub fn estimate_subordinated_pmf(
    proc: &ProcessSpec,
    sub: &SubordinatorConfig,
    t: f64,
    opts: &SimulationOptions,
) -> Result<SimulationReport> {
    proc.validate()?;
    let f = sub.build()?;
    if opts.n_paths < 1000 {
        return Err(Error::invalid(format!("at least 1000 paths are needed, got {}", opts.n_paths)));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time {t} must be finite and nonnegative")));
    }
    let started = Instant::now();
    let tallies = run_chunks(opts.n_paths, opts.workers, |range| {
        let mut tally = Tally::default();
        for i in range {
            let mut rng = opts.seed.rng(i as u64);
            let (h, out) = sample_path(proc, &f, t, &opts.limits, &mut rng)?;
            match out {
                Outcome::State(k) => {
                    *tally.states.entry(k).or_insert(0) += 1;
                    tally.sum += k as u128;
                    tally.sum_sq += (k as u128) * (k as u128);
                }
                Outcome::Cutoff => tally.cutoff += 1,
                Outcome::Infinite => tally.infinite += 1,
            }
            if opts.keep_paths {
                tally.paths.push(PathRecord {
                    path: i as u64,
                    clock: match h {
                        ClockDraw::Finite(s) => Some(s),
                        ClockDraw::Killed => None,
                    },
                    outcome: outcome_label(out),
                });
            }
        }
        Ok(tally)
    })?;
    let mut total = Tally::default();
    for t in tallies {
        total.merge(t);
    }
    let n = opts.n_paths;
    let listed: u64 = total.states.values().sum();
    debug_assert_eq!(listed + total.infinite + total.cutoff, n as u64);

    let killed = -(-f.kill_rate() * t).exp_m1();
    let mut tested = 0;
    let mut failed = 0;
    let mut tally_verdict = |v: Option<bool>| {
        if let Some(ok) = v {
            tested += 1;
            if !ok {
                failed += 1;
            }
        }
    };

    let mut rows = Vec::with_capacity(total.states.len());
    for (&k, &c) in &total.states {
        let mut r = row(c, n);
        if r.frequency <= 10.0 / n as f64 {
            rows.push(StateRow { state: k, row: r });
            continue;
        }
        let mut p = proc.pmf(&f, t, k as usize)?;
        if k == 0 && killed > 0.0 {
            // Killed paths are reported as ∞, not at 0.
            p.value = (p.value - proc.absorbed_at_infinity() * killed).max(0.0);
        }
        tally_verdict(judge(&mut r, p.value, p.abs_error, n, opts.reference_offset));
        rows.push(StateRow { state: k, row: r });
    }
    let mut infinite = row(total.infinite, n);
    tally_verdict(judge(&mut infinite, killed, 1e-15, n, opts.reference_offset));
    let mut cutoff = row(total.cutoff, n);
    if proc.family() == Family::Birth && opts.limits.k_max <= 2000 {
        let tail = proc.birth_tail(&f, t, opts.limits.k_max as usize)?;
        tally_verdict(judge(&mut cutoff, tail.value, tail.abs_error, n, opts.reference_offset));
    }

    let extinction_fraction = total.states.get(&0).map_or(0.0, |&c| c as f64 / n as f64);
    let (mean, variance) = if listed > 1 {
        let m = total.sum as f64 / listed as f64;
        let ss = total.sum_sq as f64 - listed as f64 * m * m;
        (Some(m), Some(ss.max(0.0) / (listed - 1) as f64))
    } else {
        (None, None)
    };
    Ok(SimulationReport {
        process: proc.clone(),
        subordinator: sub.clone(),
        t,
        seed: opts.seed,
        n_paths: n,
        empirical_pmf: rows,
        infinite,
        cutoff,
        cutoff_state: opts.limits.k_max,
        extinction_fraction,
        mean,
        variance,
        verdicts: VerdictSummary {
            tested,
            failed,
            all_pass: failed == 0,
        },
        wall_clock_seconds: opts.record_wall_clock.then(|| started.elapsed().as_secs_f64()),
        paths: total.paths,
    })
}

/// Holding times drawn by grid simulation of the clock.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoldingSample {
    pub times: Vec<f64>,
    /// Final grid step.
    pub step: f64,
    /// Bound on the bias of each draw from the grid (half a step).
    pub bias_bound: f64,
    pub mean: f64,
    pub halvings: usize,
}

/// Draws n holding times of the subordinated process in state r.
///
/// Each path fixes the classical holding time E/q_r and walks the clock on
/// a grid of step h until it passes that level; the draw is the midpoint of
/// the crossing step. Paths are simulated on the fine grid h/2 and read off
/// both grids, so the shift of the mean between consecutive grids is free of
/// sampling noise. The step is halved until that shift is below 0.1% and
/// the bias bound is below 1% of the mean; GridTooCoarse after 16 halvings.
pub fn sample_holding_times(
    proc: &ProcessSpec,
    f: &BernsteinFunction,
    r: usize,
    n: usize,
    seed: Seed,
    initial_step: f64,
    workers: Option<usize>,
) -> Result<HoldingSample> {
    if let BernsteinFunction::Custom(_) = f.unkilled() {
        return Err(Error::UnsupportedFamily("sampling a custom Lévy measure".into()));
    }
    if n < 2 || !(initial_step > 0.0) {
        return Err(Error::invalid("need n ≥ 2 and a positive initial step"));
    }
    let q = proc.classical_jump_rate(r)?;
    if q == 0.0 {
        return Err(Error::invalid(format!("state {r} is absorbing")));
    }
    let limits = SamplerLimits::default();
    let mut coarse = initial_step;
    for halving in 0..16 {
        let fine = coarse / 2.0;
        let pairs = run_chunks(n, workers, |range| {
            let mut out = Vec::with_capacity(range.len());
            for i in range {
                let mut rng = seed.rng(i as u64);
                let level = rng.sample::<f64, _>(Exp1) / q;
                let mut h = 0.0;
                let mut j: u64 = 0;
                loop {
                    j += 1;
                    match sample_subordinator(f, fine, &limits, &mut rng)? {
                        ClockDraw::Killed => break,
                        ClockDraw::Finite(dh) => {
                            h += dh;
                            if h > level {
                                break;
                            }
                        }
                    }
                }
                let y_fine = (j as f64 - 0.5) * fine;
                let y_coarse = (j.div_ceil(2) as f64 - 0.5) * coarse;
                out.push((y_fine, y_coarse));
            }
            Ok(out)
        })?;
        let pairs: Vec<(f64, f64)> = pairs.into_iter().flatten().collect();
        let m_fine = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let m_coarse = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let bias = fine / 2.0;
        if (m_fine - m_coarse).abs() < 1e-3 * m_fine && bias <= 0.01 * m_fine {
            return Ok(HoldingSample {
                times: pairs.into_iter().map(|p| p.0).collect(),
                step: fine,
                bias_bound: bias,
                mean: m_fine,
                halvings: halving,
            });
        }
        coarse = fine;
    }
    Err(Error::GridTooCoarse {
        bias: coarse / 2.0,
        mean: f64::NAN,
    })
}

/// Occupation time of state k up to t for the subordinated birth-death
/// process started at k, by trapezoidal sampling of the path on a grid of
/// the given step.
pub fn sample_occupation_times(
    lambda: f64,
    mu: f64,
    f: &BernsteinFunction,
    k: u64,
    t: f64,
    step: f64,
    n: usize,
    seed: Seed,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && mu > 0.0 && k >= 1 && t > 0.0 && step > 0.0 && step <= t) {
        return Err(Error::invalid("need λ, μ > 0, k ≥ 1, t > 0 and 0 < step ≤ t"));
    }
    let steps = (t / step).round().max(1.0) as usize;
    let h = t / steps as f64;
    let limits = SamplerLimits::default();
    let chunks = run_chunks(n, workers, |range| {
        let mut out = Vec::with_capacity(range.len());
        for i in range {
            let mut rng = seed.rng(i as u64);
            // Classical path advanced lazily to the current clock value.
            let mut state = k;
            let mut next_jump = rng.sample::<f64, _>(Exp1) / ((lambda + mu) * k as f64);
            let mut clock = 0.0;
            let mut prev_in = true;
            let mut occ = 0.0;
            for _ in 0..steps {
                match sample_subordinator(f, h, &limits, &mut rng)? {
                    ClockDraw::Killed => clock = f64::INFINITY,
                    ClockDraw::Finite(dh) => clock += dh,
                }
                while state > 0 && next_jump <= clock {
                    let u: f64 = rng.random();
                    if u * (lambda + mu) < lambda {
                        state += 1;
                    } else {
                        state -= 1;
                    }
                    if state > 0 {
                        next_jump += rng.sample::<f64, _>(Exp1) / ((lambda + mu) * state as f64);
                    }
                    if clock.is_infinite() && state > 0 && state != k {
                        // The limit of a killed clock: the critical or
                        // subcritical path dies out, and a supercritical one
                        // that survives leaves k for good.
                        state = 0;
                    }
                }
                let now_in = state == k;
                occ += 0.5 * h * (prev_in as u8 as f64 + now_in as u8 as f64);
                prev_in = now_in;
            }
            out.push(occ);
        }
        Ok(out)
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic d for n draws.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lam = (sn + 0.12 + 0.11 / sn) * d;
    if lam < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lam * lam).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson χ² test of counts against probabilities; cells with expected
/// count below 5 are pooled into the last cell together with the mass not
/// covered by `probs`.
pub fn chi_square_test(counts: &[u64], probs: &[f64], n: u64) -> Result<(f64, usize, f64)> {
    if counts.len() != probs.len() || n == 0 {
        return Err(Error::invalid("counts and probabilities must align"));
    }
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        if p * nf >= 5.0 {
            cells.push((c as f64, p * nf));
        } else {
            pool.0 += c as f64;
            pool.1 += p * nf;
        }
    }
    let listed_count: u64 = counts.iter().sum();
    let listed_prob: f64 = probs.iter().sum();
    pool.0 += (n - listed_count) as f64;
    pool.1 += (1.0 - listed_prob).max(0.0) * nf;
    if pool.1 > 0.0 {
        cells.push(pool);
    }
    if cells.len() < 2 {
        return Err(Error::invalid("not enough cells for a χ² test"));
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len() - 1;
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::invalid(format!("χ² distribution: {e}")))?;
    Ok((stat, df, 1.0 - dist.cdf(stat)))
}

/// Sample mean and standard error of e^{−u H^f(t)} over n draws.
pub fn laplace_audit(f: &BernsteinFunction, t: f64, u: f64, n: usize, seed: Seed) -> Result<(f64, f64)> {
    let limits = SamplerLimits::default();
    let parts = run_chunks(n, None, |range| {
        let mut s = 0.0;
        let mut ss = 0.0;
        for i in range {
            let mut rng = seed.rng(i as u64);
            let v = match sample_subordinator(f, t, &limits, &mut rng)? {
                ClockDraw::Killed => 0.0,
                ClockDraw::Finite(h) => (-u * h).exp(),
            };
            s += v;
            ss += v * v;
        }
        Ok((s, ss))
    })?;
    let (s, ss) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = s / n as f64;
    let var = (ss / n as f64 - m * m).max(0.0);
    Ok((m, (var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn within(m: f64, se: f64, want: f64) -> bool {
        (m - want).abs() <= 3.0 * se
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let s = Seed::new(7);
        let a: Vec<u64> = (0..4).map(|_| s.rng(3).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| s.rng(3).random()).collect();
        assert_eq!(a, b);
        let c: u64 = s.rng(4).random();
        assert_ne!(a[0], c);
        let d: u64 = Seed { root: 7, stream_id: 1 }.rng(3).random();
        assert_ne!(a[0], d);
    }

    #[test]
    fn laplace_audits() {
        let fams = [
            BernsteinFunction::stable(0.5).unwrap(),
            BernsteinFunction::stable(0.3).unwrap(),
            BernsteinFunction::gamma(1.0).unwrap(),
            BernsteinFunction::tempered_stable(0.5, 2.0).unwrap(),
            BernsteinFunction::killed(BernsteinFunction::gamma(2.0).unwrap(), 0.5).unwrap(),
        ];
        for f in &fams {
            for u in [0.5, 1.0, 2.0] {
                let (m, se) = laplace_audit(f, 1.0, u, 100_000, Seed::new(11)).unwrap();
                let want = (-f.eval(u).unwrap()).exp();
                assert!(within(m, se, want), "{f:?} u={u}: {m} ± {se} vs {want}");
            }
        }
    }

    #[test]
    fn gamma_mean_and_killing() {
        let f = BernsteinFunction::gamma(1.0).unwrap();
        let limits = SamplerLimits::default();
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| match sample_subordinator(&f, 2.0, &limits, &mut Seed::new(5).rng(i)).unwrap() {
                ClockDraw::Finite(h) => h,
                ClockDraw::Killed => unreachable!(),
            })
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        // Var = t/a² = 2.
        assert!(within(m, (2.0 / n as f64).sqrt(), 2.0));
        let k = BernsteinFunction::killed(f, 1.0).unwrap();
        let killed = (0..1000u64)
            .filter(|&i| sample_subordinator(&k, 1e-9, &limits, &mut Seed::new(1).rng(i)).unwrap() == ClockDraw::Killed)
            .count();
        assert_eq!(killed, 0);
        let custom = BernsteinFunction::custom(
            crate::bernstein::LevyMeasure::from_expression("exp(-s)/s", 0.0, Some(1.0)).unwrap(),
        );
        assert!(matches!(
            sample_subordinator(&custom, 1.0, &limits, &mut Seed::new(1).rng(0)),
            Err(Error::UnsupportedFamily(_))
        ));
        let heavy = BernsteinFunction::tempered_stable(0.5, 400.0).unwrap();
        assert!(sample_subordinator(&heavy, 1.0, &limits, &mut Seed::new(1).rng(0)).is_err());
    }

    fn empirical(proc: &ProcessSpec, s: f64, n: usize, exact: bool) -> BTreeMap<u64, u64> {
        let limits = SamplerLimits::default();
        let mut m = BTreeMap::new();
        for i in 0..n {
            let mut rng = Seed::new(99).rng(i as u64);
            let o = if exact {
                sample_classical(proc, s, &limits, &mut rng).unwrap()
            } else {
                sample_jump_chain(proc, s, &limits, &mut rng).unwrap()
            };
            if let Outcome::State(k) = o {
                *m.entry(k).or_insert(0) += 1;
            }
        }
        m
    }

    #[test]
    fn classical_samplers_match_laws() {
        let procs = [
            ProcessSpec::Yule { lambda: 1.0, initial: 1 },
            ProcessSpec::Yule { lambda: 0.7, initial: 3 },
            ProcessSpec::LinearDeath { mu: 1.0, initial: 5 },
            ProcessSpec::SublinearDeath { mu: 0.5, initial: 5 },
            ProcessSpec::BirthDeath {
                lambda: 1.0,
                mu: 1.0,
                initial: 2,
            },
            ProcessSpec::BirthDeath {
                lambda: 2.0,
                mu: 1.0,
                initial: 1,
            },
            ProcessSpec::BirthDeath {
                lambda: 1.0,
                mu: 2.0,
                initial: 1,
            },
            ProcessSpec::Birth {
                rates: crate::process::RatesConfig::List {
                    rates: (1..=60).map(|k| (k as f64).powf(1.2)).collect(),
                },
                initial: 1,
            },
        ];
        let n = 40_000;
        for p in &procs {
            for exact in [true, false] {
                let m = empirical(p, 1.0, n, exact);
                let top = 25usize;
                let counts: Vec<u64> = (0..=top).map(|k| *m.get(&(k as u64)).unwrap_or(&0)).collect();
                let probs: Vec<f64> = (0..=top).map(|k| p.classical_pmf(1.0, k).unwrap()).collect();
                let (_, _, pv) = chi_square_test(&counts, &probs, n as u64).unwrap();
                assert!(pv > 0.001, "{} exact={exact}: p={pv}", p.name());
            }
        }
        assert_eq!(
            sample_classical(&procs[0], 0.0, &SamplerLimits::default(), &mut Seed::new(1).rng(0)).unwrap(),
            Outcome::State(1)
        );
    }

    #[test]
    fn death_mean() {
        let p = ProcessSpec::LinearDeath { mu: 1.0, initial: 5 };
        let n = 50_000;
        let m = empirical(&p, 1.0, n, false);
        let mean = m.iter().map(|(k, c)| *k as f64 * *c as f64).sum::<f64>() / n as f64;
        let q = (-1.0f64).exp();
        let se = (5.0 * q * (1.0 - q) / n as f64).sqrt();
        assert!(within(mean, se, 5.0 * q));
    }

    #[test]
    fn subordinated_yule_report() {
        let proc = ProcessSpec::Yule { lambda: 1.0, initial: 1 };
        let sub = SubordinatorConfig::stable(0.5);
        let opts = SimulationOptions::new(20_000, 3);
        let rep = estimate_subordinated_pmf(&proc, &sub, 1.0, &opts).unwrap();
        let counted: u64 = rep.empirical_pmf.iter().map(|r| r.row.count).sum::<u64>() + rep.infinite.count + rep.cutoff.count;
        assert_eq!(counted, 20_000);
        assert!(rep.verdicts.tested > 5);
        // About 60 states are compared at 3σ each; isolated misses are
        // expected at this sample size.
        assert!(rep.verdicts.failed <= 3, "{:?}", rep.verdicts);
        let mut bad = opts.clone();
        bad.reference_offset = 0.05;
        assert!(!estimate_subordinated_pmf(&proc, &sub, 1.0, &bad).unwrap().verdicts.all_pass);
        let zero = estimate_subordinated_pmf(&proc, &sub, 0.0, &opts).unwrap();
        assert_eq!(zero.empirical_pmf.len(), 1);
        assert_eq!(zero.empirical_pmf[0].row.count, 20_000);
    }

    #[test]
    fn workers_do_not_change_results() {
        let proc = ProcessSpec::BirthDeath {
            lambda: 1.0,
            mu: 2.0,
            initial: 1,
        };
        let sub = SubordinatorConfig::gamma(1.0).with_kill_rate(0.5);
        let mut opts = SimulationOptions::new(10_000, 8);
        opts.workers = Some(1);
        let a = estimate_subordinated_pmf(&proc, &sub, 1.0, &opts).unwrap();
        opts.workers = Some(4);
        let b = estimate_subordinated_pmf(&proc, &sub, 1.0, &opts).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.verdicts.all_pass, "{:?}", a);
    }

    #[test]
    fn holding_times_are_exponential() {
        let proc = ProcessSpec::Yule { lambda: 1.0, initial: 1 };
        let f = BernsteinFunction::stable(0.5).unwrap();
        let s = sample_holding_times(&proc, &f, 1, 20_000, Seed::new(21), 0.2, None).unwrap();
        let rate = f.eval(1.0).unwrap();
        let d = ks_statistic(&s.times, |x| 1.0 - (-rate * x).exp());
        // Grid draws are discrete; allow the step in the comparison.
        let d_shift = ks_statistic(&s.times, |x| 1.0 - (-rate * (x + s.bias_bound)).exp()).min(d);
        assert!(ks_pvalue(d_shift, s.times.len()) > 0.01, "D={d}");
        let se = 1.0 / rate / (s.times.len() as f64).sqrt();
        assert!((s.mean - 1.0 / rate).abs() < 3.0 * se + s.bias_bound);
        // Faster classical jumps give shorter holding times.
        let fast = ProcessSpec::Yule { lambda: 50.0, initial: 1 };
        let t2 = sample_holding_times(&fast, &f, 1, 5_000, Seed::new(21), 0.05, None).unwrap();
        assert!(t2.mean < s.mean);
    }

    #[test]
    fn ks_pvalue_sane() {
        assert!(ks_pvalue(0.001, 1000) > 0.99);
        assert!(ks_pvalue(0.2, 1000) < 1e-10);
        // Known value: λ = 1.36 gives p ≈ 0.049.
        let n = 1_000_000usize;
        let d = 1.36 / ((n as f64).sqrt() + 0.12 + 0.11 / (n as f64).sqrt());
        assert!((ks_pvalue(d, n) - 0.0494).abs() < 1e-3);
    }
}
