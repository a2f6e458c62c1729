use thiserror::Error;

/// Errors produced by the scheduling engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid step profile: {0}")]
    InvalidProfile(String),

    #[error("invalid background trace: {0}")]
    InvalidTrace(String),

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("invalid interval [{start}, {end}]")]
    InvalidInterval { start: f64, end: f64 },

    #[error("hypervisor function has no multiplier for {jobs} jobs")]
    MissingMultiplier { jobs: usize },

    #[error("invalid hypervisor function: {0}")]
    InvalidHypervisor(String),

    #[error(
        "processor {processor} cannot receive load: stage window [{t_prev}, {t_finish}] is empty"
    )]
    Infeasible {
        processor: usize,
        t_prev: f64,
        t_finish: f64,
    },

    #[error("sum of fractions decreased from {prev_sum} at T_f={prev_tf} to {sum} at T_f={tf}")]
    NonMonotone {
        prev_tf: f64,
        prev_sum: f64,
        tf: f64,
        sum: f64,
    },

    #[error("no finishing time bracket found in [{lower}, {upper}]")]
    NoBracket { lower: f64, upper: f64 },

    #[error("unstable queue: rho = {rho} >= 1")]
    UnstableQueue { rho: f64 },

    #[error("invalid estimator window: {0}")]
    InvalidWindow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("every trial failed: {0}")]
    AllTrialsFailed(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag used by the CLI error line and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidProfile(_) => "invalid_profile",
            Error::InvalidTrace(_) => "invalid_trace",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::InvalidInterval { .. } => "invalid_interval",
            Error::MissingMultiplier { .. } => "missing_multiplier",
            Error::InvalidHypervisor(_) => "invalid_hypervisor",
            Error::Infeasible { .. } => "infeasible",
            Error::NonMonotone { .. } => "non_monotone",
            Error::NoBracket { .. } => "no_bracket",
            Error::UnstableQueue { .. } => "unstable_queue",
            Error::InvalidWindow(_) => "invalid_window",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::AllTrialsFailed(_) => "all_trials_failed",
            Error::UnknownExperiment(_) => "unknown_experiment",
            Error::Scenario(_) => "scenario",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
