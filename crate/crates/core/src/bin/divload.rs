use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use divload::harness::csv::{num, CsvTable};
use divload::harness::{run_experiment, Experiment, Scenario};
use divload::mm1::{FadingWindow, DEFAULT_FADING_RATIO, DEFAULT_WINDOW_LEN};
use divload::stochastic::{
    baseline_schedule, iterative, simulation_based, InitialGuess, StochasticOutcome,
};
use divload::{replay_oracle, solve, Error, Result, Schedule, SolveMode};

#[derive(Parser)]
#[command(
    name = "divload",
    version,
    about = "Divisible-load scheduling with time-varying speeds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one trial of a scenario and print the schedule as JSON.
    Solve {
        scenario: PathBuf,
        /// Trial whose background traces are used.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Plan under M/M/1 background load.
    Simulate {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::SimulationBased)]
        method: Method,
        /// Starting point of the iterative planner.
        #[arg(long, value_enum, default_value_t = Initial::TimeInvariant)]
        initial: Initial,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate arrival and departure rates from a JSON sample file
    /// `{"inter_arrivals": [...], "stay_times": [...]}`.
    Estimate {
        samples: PathBuf,
        /// Fading ratio of the geometric weights.
        #[arg(long, default_value_t = DEFAULT_FADING_RATIO)]
        ratio: f64,
        /// Number of most recent samples used.
        #[arg(long, default_value_t = DEFAULT_WINDOW_LEN)]
        window: usize,
    },
    /// Run a named experiment and write its CSV files.
    Experiment {
        /// table1..table5, trend-bg, trend-n, speedup or stochastic.
        name: String,
        /// Scenario file replacing the experiment's default setup.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Replay a schedule slot by slot against one trial of a scenario.
    Oracle {
        scenario: PathBuf,
        /// Schedule JSON as printed by `solve`; solved afresh when absent.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, default_value_t = 1e-3)]
        slot: f64,
        /// Largest accepted per-processor residual.
        #[arg(long, default_value_t = 1e-2)]
        tolerance: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sweep,
    Bisect,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    SimulationBased,
    Iterative,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum Initial {
    TimeInvariant,
    Baseline,
}

impl Common {
    fn apply(&self, scenario: &mut Scenario) -> Result<()> {
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        if let Some(trials) = self.trials {
            scenario.trials = trials;
        }
        if let Some(mode) = self.mode {
            scenario.solver.mode = match mode {
                Mode::Sweep => SolveMode::SweepDown,
                Mode::Bisect => SolveMode::Bisection,
            };
        }
        scenario.validate()
    }
}

#[derive(Deserialize)]
struct Samples {
    #[serde(default)]
    inter_arrivals: Vec<f64>,
    #[serde(default)]
    stay_times: Vec<f64>,
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_json(value: &serde_json::Value) {
    emit(&serde_json::to_string_pretty(value).expect("json value serializes"));
}

fn trials_csv(outcome: &StochasticOutcome, processors: usize) -> Result<String> {
    let mut header = vec!["trial_id".to_string(), "t_f".to_string()];
    header.extend((0..processors).map(|i| format!("alpha_{i}")));
    let mut table = CsvTable::new(header);
    for rec in &outcome.trials {
        if let Some(s) = &rec.schedule {
            let mut row = vec![rec.trial.to_string(), num(s.finish_time)];
            row.extend(s.fractions.iter().map(|a| num(*a)));
            table.push(row)?;
        }
    }
    Ok(table.render())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            scenario,
            trial,
            common,
        } => {
            let mut s = Scenario::load(&scenario)?;
            common.apply(&mut s)?;
            let profiles = s.profiles_for_trial(trial)?;
            let report = solve(&s.spec, &profiles, &s.solver)?;
            if report.schedule.finish_time > s.horizon() {
                log::warn!(
                    "T_f = {} exceeds the trace horizon {}",
                    report.schedule.finish_time,
                    s.horizon()
                );
            }
            let text = serde_json::to_string_pretty(&report.schedule).expect("schedule serializes");
            if let Some(dir) = &common.out {
                write_file(dir, "schedule.json", &format!("{text}\n"))?;
            }
            emit(&text);
        }
        Command::Simulate {
            scenario,
            method,
            initial,
            common,
        } => {
            let mut s = Scenario::load(&scenario)?;
            common.apply(&mut s)?;
            let setup = s.stochastic_setup()?;
            if method == Method::Baseline {
                let schedule = baseline_schedule(&setup)?;
                print_json(&json!({ "method": "baseline", "schedule": schedule }));
                return Ok(());
            }
            let outcome = match method {
                Method::SimulationBased => simulation_based(&setup, s.trials, s.seed)?,
                _ => {
                    let guess = match initial {
                        Initial::TimeInvariant => InitialGuess::TimeInvariantGuess,
                        Initial::Baseline => InitialGuess::BaselineGuess,
                    };
                    iterative(&setup, s.trials, s.seed, guess)?
                }
            };
            log::info!("planning took {:.3}s", outcome.wall_time);
            if let Some(dir) = &common.out {
                let csv = trials_csv(&outcome, s.spec.processor_count())?;
                write_file(dir, "trials.csv", &csv)?;
            }
            let name = match method {
                Method::SimulationBased => "simulation_based",
                _ => "iterative",
            };
            print_json(&json!({
                "method": name,
                "trials": outcome.trials.len(),
                "failures": outcome.failures(),
                "selected_trial": outcome.selected_index,
                "schedule": outcome.selected(),
            }));
        }
        Command::Estimate {
            samples,
            ratio,
            window,
        } => {
            let text = std::fs::read_to_string(&samples)
                .map_err(|e| Error::Io(format!("{}: {e}", samples.display())))?;
            let data: Samples =
                serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let rate = |series: &[f64]| -> Result<Option<f64>> {
                if series.is_empty() {
                    return Ok(None);
                }
                Ok(Some(
                    FadingWindow::latest(series, window, ratio)?.rate_estimate(),
                ))
            };
            let lambda = rate(&data.inter_arrivals)?;
            let mu = rate(&data.stay_times)?;
            let rho = match (lambda, mu) {
                (Some(l), Some(m)) => Some(l / m),
                _ => None,
            };
            print_json(&json!({ "lambda": lambda, "mu": mu, "rho": rho }));
        }
        Command::Experiment {
            name,
            scenario,
            common,
        } => {
            let experiment: Experiment = name.parse()?;
            let mut s = match &scenario {
                Some(path) => Scenario::load(path)?,
                None => experiment.default_scenario(0)?,
            };
            common.apply(&mut s)?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for artifact in run_experiment(&s, experiment)? {
                let path = write_file(&out, &artifact.file_name(), &artifact.render())?;
                emit(&path.display().to_string());
            }
        }
        Command::Oracle {
            scenario,
            schedule,
            trial,
            slot,
            tolerance,
            common,
        } => {
            let mut s = Scenario::load(&scenario)?;
            common.apply(&mut s)?;
            let profiles = s.profiles_for_trial(trial)?;
            let plan: Schedule = match &schedule {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    serde_json::from_str(&text)
                        .map_err(|e| Error::InvalidParameter(e.to_string()))?
                }
                None => solve(&s.spec, &profiles, &s.solver)?.schedule,
            };
            let report = replay_oracle(&plan, &s.spec, &profiles, slot)?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            if let Some(dir) = &common.out {
                write_file(dir, "oracle.json", &format!("{text}\n"))?;
            }
            emit(&text);
            let flagged = report.flagged(tolerance);
            if !flagged.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "replay residual above {tolerance} on processors {flagged:?}"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
