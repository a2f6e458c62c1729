//! Scheduling when background arrivals are only known statistically.
//!
//! Three planners share one setup:
//! - [`simulation_based`]: sample traces per trial, solve each exactly with
//!   the recursive solver, keep the median-`T_f` trial;
//! - [`iterative`]: carry a schedule across trials, re-estimating equivalent
//!   speeds over its windows from fresh traces and re-solving the linear
//!   system, keep the median-`T_f` iterate;
//! - [`baseline_schedule`]: equivalent speeds from the stationary mean job
//!   count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classic::{solve_constant_speeds, solve_time_invariant};
use crate::deterministic::{solve, SolverOptions, SpeedProfiles};
use crate::error::{Error, Result};
use crate::mm1::{baseline_wbar, simulate_background_with, MM1Params};
use crate::network::{ControlMode, NetworkSpec, Schedule};
use crate::profile::{trace_to_profile, BackgroundTrace, HypervisorFunction, StepProfile};
use crate::rng::stream_rng;

/// Default number of trials ("abundant times").
pub const DEFAULT_TRIALS: usize = 1000;
/// Default trace length in time units.
pub const DEFAULT_HORIZON: f64 = 50.0;

/// Background processes and solver settings for stochastic planning.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticSetup {
    pub spec: NetworkSpec,
    /// One process per processor, `P_0..P_N`. `P_0`'s entry is unused under
    /// a time-invariant control processor.
    pub processors: Vec<MM1Params>,
    /// Foreign connections on `P_0`, shared by every link. Defaults to
    /// `P_0`'s process.
    pub link: Option<MM1Params>,
    pub hypervisor: HypervisorFunction,
    pub horizon: f64,
    pub solver: SolverOptions,
    /// Fan trials out over the rayon pool (simulation-based planner only).
    pub parallel: bool,
}

impl StochasticSetup {
    pub fn new(spec: NetworkSpec, processors: Vec<MM1Params>) -> Result<Self> {
        let setup = Self {
            spec,
            processors,
            link: None,
            hypervisor: HypervisorFunction::EvenSplit,
            horizon: DEFAULT_HORIZON,
            solver: SolverOptions::default(),
            parallel: true,
        };
        setup.validate()?;
        Ok(setup)
    }

    /// Same process on every processor.
    pub fn homogeneous(spec: NetworkSpec, params: MM1Params) -> Result<Self> {
        let n = spec.processor_count();
        Self::new(spec, vec![params; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.processors.len() != self.spec.processor_count() {
            return Err(Error::InvalidParameter(format!(
                "{} background processes for {} processors",
                self.processors.len(),
                self.spec.processor_count()
            )));
        }
        for p in self.processors.iter().chain(self.link.iter()) {
            p.validate()?;
        }
        self.hypervisor.validate()?;
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        self.solver.validate()
    }

    fn link_params(&self) -> MM1Params {
        self.link.unwrap_or(self.processors[0])
    }

    fn varying_control(&self) -> bool {
        self.spec.control_mode() == ControlMode::TimeVaryingControl
    }

    /// Samples the traces of one trial: index `i` is processor `P_i`; under a
    /// time-varying control processor a final entry holds `P_0`'s connections.
    pub fn draw_traces(&self, seed: u64, trial: u64) -> Result<Vec<BackgroundTrace>> {
        let n = self.spec.worker_count();
        let mut traces = Vec::with_capacity(n + 2);
        for (i, params) in self.processors.iter().enumerate() {
            if i == 0 && !self.varying_control() {
                traces.push(BackgroundTrace::empty(self.horizon));
                continue;
            }
            let mut rng = stream_rng(seed, trial, i as u64);
            traces.push(simulate_background_with(params, self.horizon, &mut rng)?);
        }
        if self.varying_control() {
            let mut rng = stream_rng(seed, trial, (n + 1) as u64);
            traces.push(simulate_background_with(
                &self.link_params(),
                self.horizon,
                &mut rng,
            )?);
        }
        Ok(traces)
    }

    /// Speed profiles induced by a trace set from [`Self::draw_traces`].
    pub fn profiles_from(&self, traces: &[BackgroundTrace]) -> Result<SpeedProfiles> {
        let spec = &self.spec;
        let hv = &self.hypervisor;
        let mut w = Vec::with_capacity(spec.processor_count());
        for (i, &base) in spec.base_w().iter().enumerate() {
            w.push(trace_to_profile(&traces[i], base, hv)?);
        }
        let z = if self.varying_control() {
            let links = &traces[spec.processor_count()];
            spec.base_z()
                .iter()
                .map(|&base| trace_to_profile(links, base, hv))
                .collect::<Result<Vec<_>>>()?
        } else {
            spec.base_z()
                .iter()
                .map(|&base| StepProfile::constant(base))
                .collect::<Result<Vec<_>>>()?
        };
        SpeedProfiles::new(spec, w, z)
    }
}

/// One sampled trial: its traces and, unless the solve failed, its schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub traces: Vec<BackgroundTrace>,
    pub schedule: Option<Schedule>,
    /// Equivalent speeds `(W bars, Z bars)` of a linear re-solve.
    pub equivalent_speeds: Option<(Vec<f64>, Vec<f64>)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticOutcome {
    pub trials: Vec<TrialRecord>,
    /// Finishing times of the successful trials, in trial order.
    pub finish_times: Vec<f64>,
    /// Trial whose `T_f` is the lower median of `finish_times`.
    pub selected_index: usize,
    pub wall_time: f64,
}

impl StochasticOutcome {
    fn assemble(trials: Vec<TrialRecord>, started: Instant) -> Result<Self> {
        let ok: Vec<(usize, f64)> = trials
            .iter()
            .filter_map(|t| t.schedule.as_ref().map(|s| (t.trial, s.finish_time)))
            .collect();
        let failed = trials.len() - ok.len();
        if ok.is_empty() {
            let first = trials
                .iter()
                .find_map(|t| t.error.clone())
                .unwrap_or_else(|| "no trials".into());
            return Err(Error::AllTrialsFailed(first));
        }
        if failed > 0 {
            log::warn!(
                "{failed} of {} trials failed and were excluded",
                trials.len()
            );
        }
        let selected_index = lower_median_index(&ok);
        Ok(Self {
            finish_times: ok.iter().map(|&(_, tf)| tf).collect(),
            trials,
            selected_index,
            wall_time: started.elapsed().as_secs_f64(),
        })
    }

    pub fn selected(&self) -> &Schedule {
        self.trials[self.selected_index]
            .schedule
            .as_ref()
            .expect("selected trial succeeded")
    }

    pub fn median_finish_time(&self) -> f64 {
        self.selected().finish_time
    }

    pub fn failures(&self) -> usize {
        self.trials.iter().filter(|t| t.schedule.is_none()).count()
    }
}

/// Trial id at position `ceil(K/2) - 1` of the ascending `T_f` order
/// (ties broken by trial id).
fn lower_median_index(ok: &[(usize, f64)]) -> usize {
    let mut sorted = ok.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    sorted[sorted.len().div_ceil(2) - 1].0
}

fn warn_past_horizon(setup: &StochasticSetup, trial: usize, s: &Schedule) {
    if s.finish_time > setup.horizon {
        log::warn!(
            "trial {trial}: T_f = {} exceeds the trace horizon {}; job counts held constant",
            s.finish_time,
            setup.horizon
        );
    }
}

/// Constant-speed linear solve with equivalent speeds `w_bars` (`N + 1`)
/// and `z_bars` (`N`).
pub fn solve_linear_with_bars(
    spec: &NetworkSpec,
    w_bars: &[f64],
    z_bars: &[f64],
) -> Result<Schedule> {
    solve_constant_speeds(spec, w_bars, z_bars)
}

/// Schedule from the stationary mean job count of every process.
pub fn baseline_schedule(setup: &StochasticSetup) -> Result<Schedule> {
    let (w_bars, z_bars) = baseline_bars(setup)?;
    solve_linear_with_bars(&setup.spec, &w_bars, &z_bars)
}

/// Equivalent speeds `(W bars, Z bars)` implied by the stationary means.
pub fn baseline_bars(setup: &StochasticSetup) -> Result<(Vec<f64>, Vec<f64>)> {
    setup.validate()?;
    let spec = &setup.spec;
    let hv = &setup.hypervisor;
    let mut w_bars = Vec::with_capacity(spec.processor_count());
    for (i, (&base, params)) in spec.base_w().iter().zip(&setup.processors).enumerate() {
        if i == 0 && !setup.varying_control() {
            w_bars.push(base);
        } else {
            w_bars.push(baseline_wbar(params, base, hv)?);
        }
    }
    let z_bars = if setup.varying_control() {
        let link = setup.link_params();
        spec.base_z()
            .iter()
            .map(|&z| baseline_wbar(&link, z, hv))
            .collect::<Result<Vec<_>>>()?
    } else {
        spec.base_z().to_vec()
    };
    Ok((w_bars, z_bars))
}

/// Median-trial plan over `trials` independently sampled trace sets, each
/// solved with the recursive solver.
pub fn simulation_based(
    setup: &StochasticSetup,
    trials: usize,
    seed: u64,
) -> Result<StochasticOutcome> {
    setup.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "at least one trial is required".into(),
        ));
    }
    let started = Instant::now();
    let run = |trial: usize| -> TrialRecord {
        let traces = match setup.draw_traces(seed, trial as u64) {
            Ok(t) => t,
            Err(e) => {
                return TrialRecord {
                    trial,
                    traces: Vec::new(),
                    schedule: None,
                    equivalent_speeds: None,
                    error: Some(e.to_string()),
                }
            }
        };
        let result = setup
            .profiles_from(&traces)
            .and_then(|profiles| solve(&setup.spec, &profiles, &setup.solver));
        match result {
            Ok(report) => {
                warn_past_horizon(setup, trial, &report.schedule);
                TrialRecord {
                    trial,
                    traces,
                    schedule: Some(report.schedule),
                    equivalent_speeds: None,
                    error: None,
                }
            }
            Err(e) => {
                log::warn!("trial {trial} failed: {e}");
                TrialRecord {
                    trial,
                    traces,
                    schedule: None,
                    equivalent_speeds: None,
                    error: Some(e.to_string()),
                }
            }
        }
    };
    let records: Vec<TrialRecord> = if setup.parallel {
        (0..trials).into_par_iter().map(run).collect()
    } else {
        (0..trials).map(run).collect()
    };
    StochasticOutcome::assemble(records, started)
}

/// Starting point of the iterative planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// Base speeds, no background load.
    #[default]
    TimeInvariantGuess,
    /// Stationary-mean equivalent speeds.
    BaselineGuess,
}

/// Equivalent speed over `[start, end]`, or the fallback when the window is
/// empty.
fn bar_or(profile: &StepProfile, start: f64, end: f64, fallback: f64, what: &str) -> f64 {
    if end > start {
        if let Ok(v) = profile.equivalent(start, end) {
            return v;
        }
    }
    log::warn!("{what}: empty window [{start}, {end}], using base speed {fallback}");
    fallback
}

/// Equivalent speeds of `profiles` over the windows of `prev`.
pub fn bars_over_windows(
    spec: &NetworkSpec,
    profiles: &SpeedProfiles,
    prev: &Schedule,
) -> (Vec<f64>, Vec<f64>) {
    let tf = prev.finish_time;
    let mut w = Vec::with_capacity(spec.processor_count());
    w.push(bar_or(&profiles.w[0], 0.0, tf, spec.base_w()[0], "P0"));
    let mut z = Vec::with_capacity(spec.worker_count());
    for i in 1..=spec.worker_count() {
        let (start, stage) = (prev.window_start(i), prev.stage_times[i - 1]);
        w.push(bar_or(
            &profiles.w[i],
            stage,
            tf,
            spec.base_w()[i],
            "worker",
        ));
        z.push(bar_or(
            &profiles.z[i - 1],
            start,
            stage,
            spec.base_z()[i - 1],
            "link",
        ));
    }
    (w, z)
}

/// Iterated trace-resample and linear re-solve; each iterate's windows are
/// taken from the previous iterate.
pub fn iterative(
    setup: &StochasticSetup,
    trials: usize,
    seed: u64,
    initial: InitialGuess,
) -> Result<StochasticOutcome> {
    setup.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "at least one trial is required".into(),
        ));
    }
    let started = Instant::now();
    let mut prev = match initial {
        InitialGuess::TimeInvariantGuess => solve_time_invariant(&setup.spec),
        InitialGuess::BaselineGuess => baseline_schedule(setup)?,
    };
    let mut records = Vec::with_capacity(trials);
    for trial in 0..trials {
        let step = setup.draw_traces(seed, trial as u64).and_then(|traces| {
            let profiles = setup.profiles_from(&traces)?;
            let (w, z) = bars_over_windows(&setup.spec, &profiles, &prev);
            let schedule = solve_linear_with_bars(&setup.spec, &w, &z)?;
            Ok((traces, schedule, (w, z)))
        });
        match step {
            Ok((traces, schedule, bars)) => {
                warn_past_horizon(setup, trial, &schedule);
                prev = schedule.clone();
                records.push(TrialRecord {
                    trial,
                    traces,
                    schedule: Some(schedule),
                    equivalent_speeds: Some(bars),
                    error: None,
                });
            }
            Err(e) => {
                log::warn!("iteration {trial} failed: {e}");
                records.push(TrialRecord {
                    trial,
                    traces: Vec::new(),
                    schedule: None,
                    equivalent_speeds: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    StochasticOutcome::assemble(records, started)
}
