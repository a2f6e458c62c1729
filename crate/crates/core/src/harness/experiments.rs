//! Experiment drivers. Each experiment turns a scenario into CSV tables.

use std::str::FromStr;

use rayon::prelude::*;

use super::csv::{num, solver_summary, BoxSummary, CsvTable};
use super::scenario::{default_spec, Scenario, TraceSource, DEFAULT_HORIZON};
use crate::classic::solve_time_invariant;
use crate::deterministic::{solve, ChainPoint, SolveMode, SolverOptions, SpeedProfiles};
use crate::error::{Error, Result};
use crate::metrics::{
    realized_finish_time, sequential_time_invariant, sequential_time_varying, speedup,
};
use crate::mm1::MM1Params;
use crate::network::{ControlMode, NetworkSpec, Schedule};
use crate::oracle::replay_oracle;
use crate::rng::derive_seed;
use crate::stochastic::{
    baseline_bars, iterative, simulation_based, solve_linear_with_bars, InitialGuess,
};

/// Slot width of the replay check applied to every emitted schedule row.
pub const ORACLE_SLOT: f64 = 1e-3;
/// Largest replay residual accepted for an emitted row.
pub const ORACLE_TOLERANCE: f64 = 1e-2;

pub const TREND_BACKGROUND_COUNTS: [usize; 9] = [0, 10, 20, 30, 40, 50, 60, 70, 80];
pub const TREND_PROCESSOR_COUNTS: [usize; 7] = [2, 3, 4, 5, 6, 7, 8];
pub const TREND_W_VALUES: [f64; 3] = [1.0, 1.5, 2.0];
/// Background jobs per resource when the processor count varies.
pub const TREND_FIXED_JOBS: usize = 40;
/// Processors (control included) when the background count varies.
pub const TREND_FIXED_PROCESSORS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Table1,
    Table2,
    Table3,
    Table4,
    Table5,
    TrendBackground,
    TrendProcessors,
    Speedup,
    Stochastic,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Table1,
        Experiment::Table2,
        Experiment::Table3,
        Experiment::Table4,
        Experiment::Table5,
        Experiment::TrendBackground,
        Experiment::TrendProcessors,
        Experiment::Speedup,
        Experiment::Stochastic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Table2 => "table2",
            Experiment::Table3 => "table3",
            Experiment::Table4 => "table4",
            Experiment::Table5 => "table5",
            Experiment::TrendBackground => "trend-bg",
            Experiment::TrendProcessors => "trend-n",
            Experiment::Speedup => "speedup",
            Experiment::Stochastic => "stochastic",
        }
    }

    /// The scenario an experiment runs when no scenario file is given.
    pub fn default_scenario(self, seed: u64) -> Result<Scenario> {
        let invariant = default_spec(3, 1.0)?;
        let varying = invariant
            .clone()
            .with_control_mode(ControlMode::TimeVaryingControl);
        let uniform = |count| TraceSource::UniformPairs {
            count,
            horizon: DEFAULT_HORIZON,
        };
        let (spec, source, solver, trials) = match self {
            Experiment::Table1 => (invariant, uniform(40), SolverOptions::sweep(), 1),
            Experiment::Table2 => (invariant, uniform(0), SolverOptions::default(), 1),
            Experiment::Table3 => (invariant, uniform(0), SolverOptions::sweep(), 1),
            Experiment::Table4 => (varying, uniform(40), SolverOptions::sweep(), 1),
            Experiment::Table5 => (varying, uniform(0), SolverOptions::sweep(), 1),
            Experiment::TrendBackground | Experiment::TrendProcessors | Experiment::Speedup => (
                invariant,
                uniform(TREND_FIXED_JOBS),
                SolverOptions::default(),
                1000,
            ),
            Experiment::Stochastic => {
                let p = MM1Params::new(0.1, 0.125, 0)?;
                let source = TraceSource::Mm1 {
                    processors: vec![p; invariant.processor_count()],
                    link: None,
                    horizon: DEFAULT_HORIZON,
                };
                (invariant, source, SolverOptions::default(), 1000)
            }
        };
        let mut s = Scenario::new(spec, source);
        s.solver = solver;
        s.trials = trials;
        s.seed = seed;
        Ok(s)
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

/// A named CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub table: CsvTable,
}

impl Artifact {
    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn render(&self) -> String {
        self.table.render()
    }
}

pub fn run_experiment(scenario: &Scenario, experiment: Experiment) -> Result<Vec<Artifact>> {
    scenario.validate()?;
    let mut artifacts = match experiment {
        Experiment::Table2 => vec![closed_form_table(scenario)?],
        Experiment::Table1 | Experiment::Table3 | Experiment::Table4 | Experiment::Table5 => {
            sweep_tables(scenario, experiment.name())?
        }
        Experiment::TrendBackground => vec![trend_table(scenario, TrendAxis::Background)?],
        Experiment::TrendProcessors => vec![trend_table(scenario, TrendAxis::Processors)?],
        Experiment::Speedup => vec![trend_table(scenario, TrendAxis::Speedup)?],
        Experiment::Stochastic => stochastic_tables(scenario)?,
    };
    for a in &mut artifacts {
        a.table.footer("experiment", experiment.name());
        a.table
            .footer("schema_version", scenario.schema_version.to_string());
        a.table.footer("seed", scenario.seed.to_string());
        a.table.footer("trials", scenario.trials.to_string());
        a.table.footer("solver", solver_summary(&scenario.solver));
        a.table.footer("scenario_sha256", scenario.content_hash());
    }
    Ok(artifacts)
}

/// Fails unless `schedule` survives a slot-level replay against `profiles`.
pub fn verify_row(schedule: &Schedule, spec: &NetworkSpec, profiles: &SpeedProfiles) -> Result<()> {
    let report = replay_oracle(schedule, spec, profiles, ORACLE_SLOT)?;
    let worst = report.max_residual();
    if worst > ORACLE_TOLERANCE {
        return Err(Error::Scenario(format!(
            "schedule with T_f = {} fails replay: residual {worst} on processors {:?}",
            schedule.finish_time,
            report.flagged(ORACLE_TOLERANCE)
        )));
    }
    Ok(())
}

fn schedule_header(spec: &NetworkSpec, leading: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = leading.iter().map(|s| s.to_string()).collect();
    h.push("t_f".into());
    h.extend((0..spec.processor_count()).map(|i| format!("alpha_{i}")));
    h.push("sum".into());
    h
}

fn schedule_fields(leading: Vec<String>, finish_time: f64, fractions: &[f64]) -> Vec<String> {
    let mut row = leading;
    row.push(num(finish_time));
    row.extend(fractions.iter().map(|a| num(*a)));
    row.push(num(fractions.iter().sum()));
    row
}

fn closed_form_table(scenario: &Scenario) -> Result<Artifact> {
    let spec = &scenario.spec;
    let s = solve_time_invariant(spec);
    verify_row(&s, spec, &SpeedProfiles::constant(spec))?;
    let mut table = CsvTable::new(schedule_header(spec, &[]));
    table.push(schedule_fields(Vec::new(), s.finish_time, &s.fractions))?;
    Ok(Artifact {
        name: "table2".into(),
        table,
    })
}

fn sweep_tables(scenario: &Scenario, name: &str) -> Result<Vec<Artifact>> {
    let spec = &scenario.spec;
    let profiles = scenario.profiles_for_trial(0)?;
    let opts = SolverOptions {
        mode: SolveMode::SweepDown,
        ..scenario.solver
    };
    let report = solve(spec, &profiles, &opts)?;
    if report.schedule.finish_time > scenario.horizon() {
        log::warn!(
            "T_f = {} exceeds the trace horizon {}",
            report.schedule.finish_time,
            scenario.horizon()
        );
    }

    let mut rows: Vec<(&str, ChainPoint)> = Vec::new();
    if let Some((lo, hi)) = &report.bracket {
        rows.push(("grid_upper", hi.clone()));
        rows.push(("grid_lower", lo.clone()));
    }
    if let Some(c) = report.closest_grid_point() {
        rows.push(("closest", c.clone()));
    }
    let mut table = CsvTable::new(schedule_header(spec, &["point"]));
    for (label, p) in &rows {
        verify_row(&p.schedule(), spec, &profiles)?;
        table.push(schedule_fields(
            vec![label.to_string()],
            p.finish_time,
            &p.fractions,
        ))?;
    }
    verify_row(&report.schedule, spec, &profiles)?;
    table.push(schedule_fields(
        vec!["solution".into()],
        report.schedule.finish_time,
        &report.schedule.fractions,
    ))?;

    let mut curve = CsvTable::new(schedule_header(spec, &[]));
    for p in &report.curve {
        curve.push(schedule_fields(Vec::new(), p.finish_time, &p.fractions))?;
    }
    Ok(vec![
        Artifact {
            name: name.to_string(),
            table,
        },
        Artifact {
            name: format!("{name}_sweep"),
            table: curve,
        },
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TrendAxis {
    Background,
    Processors,
    Speedup,
}

/// Averages over the trials of one trend configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendPoint {
    pub mean_finish_time: f64,
    pub mean_speedup: f64,
    pub failures: usize,
    /// Trials whose `T_f` ran past the trace horizon.
    pub past_horizon: usize,
}

/// Mean `T_f` and speedup over `scenario.trials` uniform-pair trials, on the
/// default network with `processors` processors, inverse speed `w`, `jobs`
/// background jobs per time-varying resource and the given control mode.
pub fn trend_point(
    scenario: &Scenario,
    mode: ControlMode,
    processors: usize,
    w: f64,
    jobs: usize,
) -> Result<TrendPoint> {
    if processors < 2 {
        return Err(Error::InvalidParameter(
            "a trend point needs at least one worker".into(),
        ));
    }
    let mut sub = scenario.clone();
    sub.spec = default_spec(processors - 1, w)?.with_control_mode(mode);
    sub.trace_source = TraceSource::UniformPairs {
        count: jobs,
        horizon: scenario.horizon(),
    };
    let horizon = sub.horizon();
    let outcomes: Vec<Result<(f64, f64)>> = (0..sub.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let profiles = sub.profiles_for_trial(trial)?;
            let tf = solve(&sub.spec, &profiles, &sub.solver)?
                .schedule
                .finish_time;
            let tfs = match mode {
                ControlMode::TimeInvariantControl => sequential_time_invariant(w, sub.spec.t_cp()),
                ControlMode::TimeVaryingControl => {
                    sequential_time_varying(&profiles.w[0], sub.spec.t_cp())?
                }
            };
            Ok((tf, speedup(tfs, tf)?))
        })
        .collect();
    let mut sum_tf = 0.0;
    let mut sum_sp = 0.0;
    let mut ok = 0usize;
    let mut past_horizon = 0usize;
    for (trial, o) in outcomes.iter().enumerate() {
        match o {
            Ok((tf, sp)) => {
                sum_tf += tf;
                sum_sp += sp;
                ok += 1;
                if *tf > horizon {
                    past_horizon += 1;
                }
            }
            Err(e) => log::warn!("trial {trial} failed: {e}"),
        }
    }
    if ok == 0 {
        return Err(Error::AllTrialsFailed(format!(
            "{processors} processors, W = {w}, {jobs} jobs"
        )));
    }
    if past_horizon > 0 {
        log::warn!(
            "{past_horizon} trials ({processors} processors, W = {w}, {jobs} jobs) finished past the horizon {horizon}"
        );
    }
    Ok(TrendPoint {
        mean_finish_time: sum_tf / ok as f64,
        mean_speedup: sum_sp / ok as f64,
        failures: outcomes.len() - ok,
        past_horizon,
    })
}

fn trend_table(scenario: &Scenario, axis: TrendAxis) -> Result<Artifact> {
    let (name, column, values, metric): (&str, &str, &[usize], &str) = match axis {
        TrendAxis::Background => (
            "trend_bg",
            "background_jobs",
            &TREND_BACKGROUND_COUNTS,
            "mean_t_f",
        ),
        TrendAxis::Processors => ("trend_n", "processors", &TREND_PROCESSOR_COUNTS, "mean_t_f"),
        TrendAxis::Speedup => (
            "speedup",
            "processors",
            &TREND_PROCESSOR_COUNTS,
            "mean_speedup",
        ),
    };
    let mut table = CsvTable::new(["algorithm", "w", column, metric, "failures", "past_horizon"]);
    let modes = [
        (1, ControlMode::TimeInvariantControl),
        (2, ControlMode::TimeVaryingControl),
    ];
    for (algorithm, mode) in modes {
        for &w in &TREND_W_VALUES {
            for &v in values {
                let point = match axis {
                    TrendAxis::Background => {
                        trend_point(scenario, mode, TREND_FIXED_PROCESSORS, w, v)?
                    }
                    _ => trend_point(scenario, mode, v, w, TREND_FIXED_JOBS)?,
                };
                let value = match axis {
                    TrendAxis::Speedup => point.mean_speedup,
                    _ => point.mean_finish_time,
                };
                table.push(vec![
                    algorithm.to_string(),
                    num(w),
                    v.to_string(),
                    num(value),
                    point.failures.to_string(),
                    point.past_horizon.to_string(),
                ])?;
            }
        }
    }
    Ok(Artifact {
        name: name.into(),
        table,
    })
}

/// Seed of the independent traces the stochastic plans are evaluated on.
fn evaluation_seed(seed: u64) -> u64 {
    derive_seed(seed, u64::MAX, u64::MAX)
}

fn stochastic_tables(scenario: &Scenario) -> Result<Vec<Artifact>> {
    let mut setup = scenario.stochastic_setup()?;
    setup.solver = scenario.solver;
    let spec = setup.spec.clone();
    let k = scenario.trials;

    let sim = simulation_based(&setup, k, scenario.seed)?;
    let iter = iterative(&setup, k, scenario.seed, InitialGuess::TimeInvariantGuess)?;
    let (bw, bz) = baseline_bars(&setup)?;
    let base = solve_linear_with_bars(&spec, &bw, &bz)?;
    log::info!(
        "simulation-based {:.3}s, iterative {:.3}s",
        sim.wall_time,
        iter.wall_time
    );

    // Every emitted plan is replayed against the profiles it was solved on.
    let mut trials = CsvTable::new(schedule_header(&spec, &["trial_id"]));
    for rec in &sim.trials {
        if let Some(s) = &rec.schedule {
            verify_row(s, &spec, &setup.profiles_from(&rec.traces)?)?;
            trials.push(schedule_fields(
                vec![rec.trial.to_string()],
                s.finish_time,
                &s.fractions,
            ))?;
        }
    }
    let constant_profiles = |w: &[f64], z: &[f64]| -> Result<SpeedProfiles> {
        let w = w
            .iter()
            .map(|&v| crate::profile::StepProfile::constant(v))
            .collect::<Result<Vec<_>>>()?;
        let z = z
            .iter()
            .map(|&v| crate::profile::StepProfile::constant(v))
            .collect::<Result<Vec<_>>>()?;
        SpeedProfiles::new(&spec, w, z)
    };
    let sim_plan = sim.selected().clone();
    let iter_rec = &iter.trials[iter.selected_index];
    let iter_plan = iter.selected().clone();
    let (iw, iz) = iter_rec
        .equivalent_speeds
        .clone()
        .expect("iterative trials record their equivalent speeds");
    verify_row(&iter_plan, &spec, &constant_profiles(&iw, &iz)?)?;
    verify_row(&base, &spec, &constant_profiles(&bw, &bz)?)?;

    let mut plans = CsvTable::new(schedule_header(&spec, &["method", "selected_trial"]));
    let plan_rows = [
        ("simulation_based", Some(sim.selected_index), &sim_plan),
        ("iterative", Some(iter.selected_index), &iter_plan),
        ("baseline", None, &base),
    ];
    for (method, trial, s) in plan_rows {
        let t = trial.map(|t| t.to_string()).unwrap_or_default();
        plans.push(schedule_fields(
            vec![method.into(), t],
            s.finish_time,
            &s.fractions,
        ))?;
    }

    // Realized makespans of each plan on independent traces, and the
    // optimum each of those traces admits.
    let eval_seed = evaluation_seed(scenario.seed);
    let evaluated: Vec<Result<[f64; 4]>> = (0..k as u64)
        .into_par_iter()
        .map(|trial| {
            let traces = setup.draw_traces(eval_seed, trial)?;
            let profiles = setup.profiles_from(&traces)?;
            let optimum = solve(&spec, &profiles, &setup.solver)?.schedule.finish_time;
            Ok([
                realized_finish_time(&spec, &profiles, &sim_plan.fractions)?,
                realized_finish_time(&spec, &profiles, &iter_plan.fractions)?,
                realized_finish_time(&spec, &profiles, &base.fractions)?,
                optimum,
            ])
        })
        .collect();
    let mut columns: [Vec<f64>; 4] = Default::default();
    for (trial, e) in evaluated.into_iter().enumerate() {
        match e {
            Ok(v) => {
                for (c, x) in columns.iter_mut().zip(v) {
                    c.push(x);
                }
            }
            Err(e) => log::warn!("evaluation trial {trial} failed: {e}"),
        }
    }
    let mut header = vec!["method".to_string()];
    header.extend(BoxSummary::HEADER.iter().map(|s| s.to_string()));
    let mut quantiles = CsvTable::new(header);
    let methods = [
        "simulation_based",
        "iterative",
        "baseline",
        "deterministic_reference",
    ];
    for (method, data) in methods.iter().zip(&columns) {
        let mut row = vec![method.to_string()];
        row.extend(BoxSummary::from_data(data)?.fields());
        quantiles.push(row)?;
    }
    let past = columns[3].iter().filter(|&&t| t > setup.horizon).count();
    quantiles.footer("past_horizon", past.to_string());
    trials.footer("failures", sim.failures().to_string());

    Ok(vec![
        Artifact {
            name: "stochastic_quantiles".into(),
            table: quantiles,
        },
        Artifact {
            name: "stochastic_plans".into(),
            table: plans,
        },
        Artifact {
            name: "stochastic_trials".into(),
            table: trials,
        },
    ])
}
