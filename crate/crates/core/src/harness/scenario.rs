//! Scenario files: a network, where its background load comes from, solver
//! settings, trial count and seed.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "spec": {"base_w": [1, 1, 1, 1], "base_z": [1.1, 1.2, 1.3], "t_cp": 4, "t_cm": 1,
//!            "control_mode": "time_invariant_control"},
//!   "trace_source": {"kind": "uniform_pairs", "count": 40, "horizon": 50},
//!   "solver": {"mode": "sweep_down", "sweep_step": 0.01},
//!   "trials": 1000,
//!   "seed": 7
//! }
//! ```
//!
//! `trace_source` is one of `uniform_pairs`, `mm1` (`processors`: one
//! `{lambda, mu, start_state}` per processor, optional `link`, `horizon`) or
//! `explicit` (`processors`: one list of `[arrival, departure]` pairs per
//! processor, optional `connections` for `P_0`'s links, `horizon`; a
//! departure of `null` means the job never leaves). An explicit source may
//! instead name a `file` holding those fields, resolved relative to the
//! scenario file.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::deterministic::{SolverOptions, SpeedProfiles};
use crate::error::{Error, Result};
use crate::mm1::MM1Params;
use crate::network::{ControlMode, NetworkSpec};
use crate::profile::{
    trace_to_profile, BackgroundJob, BackgroundTrace, HypervisorFunction, StepProfile,
};
use crate::rng::{stream_rng, TrialRng};
use crate::stochastic::StochasticSetup;

pub const SCHEMA_VERSION: u32 = 1;

/// Length of the experiment window in time units.
pub const DEFAULT_HORIZON: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceSource {
    /// `count` uniformly placed jobs per time-varying resource.
    UniformPairs {
        count: usize,
        horizon: f64,
    },
    Mm1 {
        processors: Vec<MM1Params>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        link: Option<MM1Params>,
        horizon: f64,
    },
    Explicit(ExplicitTraces),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ExplicitTraces {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub processors: Vec<Vec<(f64, Option<f64>)>>,
    #[serde(default)]
    pub connections: Vec<(f64, Option<f64>)>,
}

fn trace_from_pairs(pairs: &[(f64, Option<f64>)], horizon: f64) -> Result<BackgroundTrace> {
    let jobs = pairs
        .iter()
        .map(|&(arrival, departure)| BackgroundJob {
            arrival,
            departure: departure.unwrap_or(f64::INFINITY),
        })
        .collect();
    BackgroundTrace::new(jobs, horizon)
}

impl ExplicitTraces {
    fn resolve(&self, base_dir: Option<&Path>) -> Result<ExplicitTraces> {
        match &self.file {
            None => Ok(self.clone()),
            Some(file) => {
                let path = match base_dir {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
                let mut loaded: ExplicitTraces = serde_json::from_str(&text)
                    .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
                loaded.file = None;
                if loaded.horizon.is_none() {
                    loaded.horizon = self.horizon;
                }
                Ok(loaded)
            }
        }
    }
}

fn default_trials() -> usize {
    1
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub spec: NetworkSpec,
    #[serde(default)]
    pub hypervisor: HypervisorFunction,
    pub trace_source: TraceSource,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn new(spec: NetworkSpec, trace_source: TraceSource) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            spec,
            hypervisor: HypervisorFunction::EvenSplit,
            trace_source,
            solver: SolverOptions::default(),
            trials: 1,
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Loads a scenario, inlining any explicit trace file it references.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        let mut s = Self::from_json(&text)?;
        if let TraceSource::Explicit(ex) = &s.trace_source {
            s.trace_source = TraceSource::Explicit(ex.resolve(path.parent())?);
            s.validate()?;
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Scenario(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.trials == 0 {
            return Err(Error::Scenario("trials must be at least 1".into()));
        }
        self.solver.validate()?;
        self.hypervisor.validate()?;
        let n = self.spec.processor_count();
        match &self.trace_source {
            TraceSource::UniformPairs { horizon, .. } => check_horizon(*horizon),
            TraceSource::Mm1 {
                processors,
                horizon,
                ..
            } => {
                check_horizon(*horizon)?;
                if processors.len() != n {
                    return Err(Error::Scenario(format!(
                        "{} M/M/1 processes for {n} processors",
                        processors.len()
                    )));
                }
                Ok(())
            }
            TraceSource::Explicit(ex) => {
                if ex.file.is_some() {
                    // resolved on load
                    return Ok(());
                }
                check_horizon(ex.horizon.unwrap_or(DEFAULT_HORIZON))?;
                if !ex.processors.is_empty() && ex.processors.len() != n {
                    return Err(Error::Scenario(format!(
                        "{} explicit traces for {n} processors",
                        ex.processors.len()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn horizon(&self) -> f64 {
        match &self.trace_source {
            TraceSource::UniformPairs { horizon, .. } | TraceSource::Mm1 { horizon, .. } => {
                *horizon
            }
            TraceSource::Explicit(ex) => ex.horizon.unwrap_or(DEFAULT_HORIZON),
        }
    }

    /// Git-style content hash of the canonical scenario JSON.
    pub fn content_hash(&self) -> String {
        let body = serde_json::to_string(self).expect("scenario serializes");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn stochastic_setup(&self) -> Result<StochasticSetup> {
        match &self.trace_source {
            TraceSource::Mm1 {
                processors,
                link,
                horizon,
            } => {
                let mut setup = StochasticSetup::new(self.spec.clone(), processors.clone())?;
                setup.link = *link;
                setup.horizon = *horizon;
                setup.hypervisor = self.hypervisor.clone();
                setup.solver = self.solver;
                Ok(setup)
            }
            _ => Err(Error::Scenario(
                "stochastic planning needs an `mm1` trace source".into(),
            )),
        }
    }

    /// Background traces of one trial, in the layout of
    /// [`StochasticSetup::draw_traces`]: one per processor, then `P_0`'s
    /// connections under a time-varying control processor.
    pub fn traces_for_trial(&self, trial: u64) -> Result<Vec<BackgroundTrace>> {
        let varying = self.spec.control_mode() == ControlMode::TimeVaryingControl;
        let n = self.spec.processor_count();
        match &self.trace_source {
            TraceSource::UniformPairs { count, horizon } => {
                let mut traces = Vec::with_capacity(n + 1);
                for i in 0..n {
                    if i == 0 && !varying {
                        traces.push(BackgroundTrace::empty(*horizon));
                    } else {
                        let mut rng = stream_rng(self.seed, trial, i as u64);
                        traces.push(generate_uniform_trace_with(*count, *horizon, &mut rng)?);
                    }
                }
                if varying {
                    let mut rng = stream_rng(self.seed, trial, n as u64);
                    traces.push(generate_uniform_trace_with(*count, *horizon, &mut rng)?);
                }
                Ok(traces)
            }
            TraceSource::Mm1 { .. } => self.stochastic_setup()?.draw_traces(self.seed, trial),
            TraceSource::Explicit(ex) => {
                let horizon = ex.horizon.unwrap_or(DEFAULT_HORIZON);
                let mut traces = Vec::with_capacity(n + 1);
                for i in 0..n {
                    match ex.processors.get(i) {
                        Some(pairs) => traces.push(trace_from_pairs(pairs, horizon)?),
                        None => traces.push(BackgroundTrace::empty(horizon)),
                    }
                }
                if varying {
                    traces.push(trace_from_pairs(&ex.connections, horizon)?);
                }
                Ok(traces)
            }
        }
    }

    /// Speed profiles of one trial.
    pub fn profiles_for_trial(&self, trial: u64) -> Result<SpeedProfiles> {
        let traces = self.traces_for_trial(trial)?;
        profiles_from_traces(&self.spec, &self.hypervisor, &traces)
    }
}

fn check_horizon(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Scenario(format!("horizon {h} must be positive")))
    }
}

/// Builds profiles from a trace set laid out as in
/// [`Scenario::traces_for_trial`]. Under a time-invariant control processor,
/// `P_0` and the links stay at their base speeds.
pub fn profiles_from_traces(
    spec: &NetworkSpec,
    hv: &HypervisorFunction,
    traces: &[BackgroundTrace],
) -> Result<SpeedProfiles> {
    let n = spec.processor_count();
    let varying = spec.control_mode() == ControlMode::TimeVaryingControl;
    let mut w = Vec::with_capacity(n);
    for (i, &base) in spec.base_w().iter().enumerate() {
        if i == 0 && !varying {
            w.push(StepProfile::constant(base)?);
        } else {
            w.push(trace_to_profile(&traces[i], base, hv)?);
        }
    }
    let z = spec
        .base_z()
        .iter()
        .map(|&base| {
            if varying {
                trace_to_profile(&traces[n], base, hv)
            } else {
                StepProfile::constant(base)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SpeedProfiles::new(spec, w, z)
}

/// `count` jobs whose arrival and departure are the smaller and larger of
/// two independent `Uniform(0, horizon)` draws.
pub fn generate_uniform_trace(count: usize, horizon: f64, seed: u64) -> Result<BackgroundTrace> {
    let mut rng = stream_rng(seed, 0, 0);
    generate_uniform_trace_with(count, horizon, &mut rng)
}

pub fn generate_uniform_trace_with(
    count: usize,
    horizon: f64,
    rng: &mut TrialRng,
) -> Result<BackgroundTrace> {
    check_horizon(horizon)
        .map_err(|_| Error::InvalidTrace(format!("horizon {horizon} must be positive")))?;
    let mut jobs = Vec::with_capacity(count);
    while jobs.len() < count {
        let a = rng.random::<f64>() * horizon;
        let b = rng.random::<f64>() * horizon;
        if a == b {
            continue;
        }
        jobs.push(BackgroundJob {
            arrival: a.min(b),
            departure: a.max(b),
        });
    }
    BackgroundTrace::new(jobs, horizon)
}

/// Experiment network: `T_cm = 1`, `T_cp = 4`, every `W_i = w` and
/// `Z_i = 1 + 0.1 i` for workers `i = 1..=n_workers`.
pub fn default_spec(n_workers: usize, w: f64) -> Result<NetworkSpec> {
    let z = (1..=n_workers).map(|i| 1.0 + 0.1 * i as f64).collect();
    NetworkSpec::new(
        vec![w; n_workers + 1],
        z,
        4.0,
        1.0,
        ControlMode::TimeInvariantControl,
    )
}
