//! Scenario files, experiment drivers and CSV output.

pub mod csv;
pub mod experiments;
pub mod scenario;

pub use experiments::{run_experiment, trend_point, verify_row, Artifact, Experiment, TrendPoint};
pub use scenario::{
    default_spec, generate_uniform_trace, profiles_from_traces, Scenario, TraceSource,
};
