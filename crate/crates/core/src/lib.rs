//! Divisible-load scheduling on single-level tree networks whose processor
//! and link speeds change over time with background load.
//!
//! The control processor `P_0` splits one unit of load among itself and `N`
//! workers, sending each worker its share in turn. Speeds are given as
//! piecewise-constant inverse-speed profiles; the solvers find the split for
//! which every processor finishes at the same time.
//!
//! * [`classic`]: constant speeds, closed form.
//! * [`deterministic`]: known time-varying profiles, recursive solvers.
//! * [`mm1`] and [`stochastic`]: background load as M/M/1 queues and the
//!   planners built on it.
//! * [`oracle`]: slot-level replay used to check schedules.
//! * [`harness`]: scenarios, experiments and CSV output.

// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classic;
pub mod deterministic;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod mm1;
pub mod network;
pub mod oracle;
pub mod profile;
pub mod rng;
pub mod stochastic;

pub use classic::solve_time_invariant;
pub use deterministic::{
    algorithm_one, algorithm_two, solve, solve_stage_time, SolveMode, SolveReport, SolverOptions,
    SpeedProfiles,
};
pub use error::{Error, Result};
pub use metrics::{
    realized_finish_time, sequential_time_invariant, sequential_time_varying, speedup,
};
pub use mm1::{estimate_lambda, estimate_mu, simulate_background, FadingWindow, MM1Params};
pub use network::{ControlMode, NetworkSpec, Schedule};
pub use oracle::{replay_oracle, ReplayReport};
pub use profile::{
    equivalent_w, equivalent_z, integrate_reciprocal, trace_to_profile, BackgroundJob,
    BackgroundTrace, HypervisorFunction, StepProfile,
};
pub use stochastic::{
    baseline_schedule, iterative, simulation_based, InitialGuess, StochasticSetup,
};
