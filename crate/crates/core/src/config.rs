//! Run configuration read by the command-line front end.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::birth::RegularityDeclaration;
use crate::error::{Error, Result};
use crate::montecarlo::{SamplerLimits, Seed};
use crate::numerics::SeriesTruncation;
use crate::process::{ProcessSpec, SubordinatorConfig};

/// A time point; `"inf"` in JSON stands for t = ∞ where that is meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Time(pub f64);

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Time(v)),
            Raw::Text(s) if s == "inf" => Ok(Time(f64::INFINITY)),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("time {s:?} is neither a number nor \"inf\""))),
        }
    }
}

/// Which states to report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSelection {
    List(Vec<u64>),
    Range { from: u64, to: u64 },
}

impl StateSelection {
    pub fn states(&self) -> Vec<u64> {
        match self {
            StateSelection::List(v) => v.clone(),
            StateSelection::Range { from, to } => (*from..=*to).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

/// Overrides of the numerical tolerances.
///
/// `series` controls the outer series of the unequal-rate birth-death laws;
/// `abs`/`rel` set the largest acceptable error bound of an emitted value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesTruncation>,
    /// Absolute error target; results whose error bound exceeds it are
    /// flagged, and validation thresholds are capped by it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel: Option<f64>,
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub stream_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "SamplerLimits::default", skip_serializing_if = "is_default_limits")]
    pub limits: SamplerLimits,
    /// Shift applied to every analytic reference; a nonzero value must
    /// make the run fail.
    #[serde(default, skip_serializing_if = "is_default")]
    pub reference_offset: f64,
    #[serde(default, skip_serializing_if = "is_default")]
    pub record_wall_clock: bool,
    /// Optional CSV file receiving one row per path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths_csv: Option<String>,
}

fn default_paths() -> usize {
    100_000
}

fn is_default_limits(l: &SamplerLimits) -> bool {
    *l == SamplerLimits::default()
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            paths: default_paths(),
            stream_id: 0,
            workers: None,
            limits: SamplerLimits::default(),
            reference_offset: 0.0,
            record_wall_clock: false,
            paths_csv: None,
        }
    }
}

/// Everything a command needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub process: ProcessSpec,
    pub subordinator: SubordinatorConfig,
    #[serde(default = "default_times")]
    pub times: Vec<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<StateSelection>,
    /// Moment orders for `moments`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<usize>>,
    /// Table format; `simulate` defaults to JSON, everything else to CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "is_default")]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "is_default")]
    pub simulation: SimulationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<RegularityDeclaration>,
}

fn default_times() -> Vec<Time> {
    vec![Time(1.0)]
}

impl RunConfig {
    pub fn new(process: ProcessSpec, subordinator: SubordinatorConfig) -> Self {
        RunConfig {
            process,
            subordinator,
            times: default_times(),
            states: None,
            orders: None,
            output: None,
            seed: 0,
            tolerances: Tolerances::default(),
            simulation: SimulationConfig::default(),
            regularity: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        self.subordinator.build()?;
        if self.times.is_empty() {
            return Err(Error::invalid("config: at least one time is needed"));
        }
        for t in &self.times {
            if !(t.0 >= 0.0) {
                return Err(Error::invalid(format!("config: time {} must be nonnegative", t.0)));
            }
        }
        if let Some(s) = &self.tolerances.series {
            s.validate()?;
        }
        for v in [self.tolerances.abs, self.tolerances.rel].into_iter().flatten() {
            if !(v > 0.0) {
                return Err(Error::invalid("config: tolerances must be positive"));
            }
        }
        if let Some(StateSelection::Range { from, to }) = &self.states {
            if from > to {
                return Err(Error::invalid("config: state range is empty"));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> Seed {
        Seed {
            root: self.seed,
            stream_id: self.simulation.stream_id,
        }
    }
}
