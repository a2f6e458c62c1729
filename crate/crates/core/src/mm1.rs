//! M/M/1 background load: rate estimation from a fading-memory window and
//! simulation of the job-count process.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{BackgroundJob, BackgroundTrace, HypervisorFunction};
use crate::rng::{exponential, TrialRng};

/// Arrival rate, departure rate and initial job count of one resource.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MM1Params {
    pub lambda: f64,
    pub mu: f64,
    #[serde(default)]
    pub start_state: usize,
}

impl MM1Params {
    pub fn new(lambda: f64, mu: f64, start_state: usize) -> Result<Self> {
        let p = Self {
            lambda,
            mu,
            start_state,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite())
            || !(self.mu > 0.0 && self.mu.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "rates must be positive (lambda = {}, mu = {})",
                self.lambda, self.mu
            )));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    /// Probability that a transition out of a nonzero state is an arrival.
    pub fn p_next(&self) -> f64 {
        self.lambda / (self.lambda + self.mu)
    }

    /// Stationary mean number of jobs, `rho / (1 - rho)`.
    pub fn mean_jobs(&self) -> Result<f64> {
        let rho = self.rho();
        if rho >= 1.0 {
            return Err(Error::UnstableQueue { rho });
        }
        Ok(rho / (1.0 - rho))
    }
}

/// Weighted samples for a fading-memory estimate; weights ascend towards the
/// newest sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingWindow {
    samples: Vec<f64>,
    weights: Vec<f64>,
}

pub const DEFAULT_FADING_RATIO: f64 = 0.95;
pub const DEFAULT_WINDOW_LEN: usize = 50;

impl FadingWindow {
    pub fn new(samples: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidWindow("empty window".into()));
        }
        if samples.len() != weights.len() {
            return Err(Error::InvalidWindow(format!(
                "{} samples but {} weights",
                samples.len(),
                weights.len()
            )));
        }
        if samples
            .iter()
            .chain(&weights)
            .any(|v| !(*v > 0.0) || !v.is_finite())
        {
            return Err(Error::InvalidWindow("entries must be positive".into()));
        }
        if weights.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidWindow("weights must be nondecreasing".into()));
        }
        Ok(Self { samples, weights })
    }

    pub fn uniform(samples: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; samples.len()];
        Self::new(samples, weights)
    }

    /// Geometric weights `ratio^(n - i)` for `i = 1..=n` (oldest first).
    pub fn geometric(samples: Vec<f64>, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::InvalidWindow(format!(
                "fading ratio {ratio} outside (0, 1]"
            )));
        }
        let n = samples.len();
        let weights = (1..=n).map(|i| ratio.powi((n - i) as i32)).collect();
        Self::new(samples, weights)
    }

    /// Keeps the newest `len` samples of a chronological series with the
    /// default geometric weights.
    pub fn latest(series: &[f64], len: usize, ratio: f64) -> Result<Self> {
        let start = series.len().saturating_sub(len);
        Self::geometric(series[start..].to_vec(), ratio)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted exponential MLE: `sum(w) / sum(w * x)`.
    pub fn rate_estimate(&self) -> f64 {
        let num: f64 = self.weights.iter().sum();
        let den: f64 = self
            .weights
            .iter()
            .zip(&self.samples)
            .map(|(w, x)| w * x)
            .sum();
        num / den
    }
}

/// Arrival-rate estimate from inter-arrival times.
pub fn estimate_lambda(window: &FadingWindow) -> f64 {
    window.rate_estimate()
}

/// Departure-rate estimate from stay times.
pub fn estimate_mu(window: &FadingWindow) -> f64 {
    window.rate_estimate()
}

/// Birth-death path of the job count: `states[k]` holds from `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl StatePath {
    /// Time-weighted mean of the state over `[0, horizon]`.
    pub fn time_average(&self) -> f64 {
        let mut area = 0.0;
        for k in 0..self.times.len() {
            let end = self.times.get(k + 1).copied().unwrap_or(self.horizon);
            area += (end - self.times[k]) * self.states[k] as f64;
        }
        area / self.horizon
    }

    /// `(up moves, moves out of nonzero states)`.
    pub fn move_counts(&self) -> (usize, usize) {
        let mut up = 0;
        let mut from_nonzero = 0;
        for w in self.states.windows(2) {
            if w[0] > 0 {
                from_nonzero += 1;
                if w[1] > w[0] {
                    up += 1;
                }
            }
        }
        (up, from_nonzero)
    }
}

/// Simulates the job-count walk up to `horizon`.
///
/// From state 0 the holding time is `Exp(lambda)` and the walk moves up;
/// from `k >= 1` it is `Exp(lambda + mu)` and the walk moves up with
/// probability `lambda / (lambda + mu)`, down otherwise.
pub fn simulate_path(params: &MM1Params, horizon: f64, rng: &mut TrialRng) -> Result<StatePath> {
    params.validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must be positive"
        )));
    }
    let p_next = params.p_next();
    let busy_rate = params.lambda + params.mu;
    let mut times = vec![0.0];
    let mut states = vec![params.start_state];
    let mut t = 0.0;
    let mut state = params.start_state;
    loop {
        if state == 0 {
            t += exponential(rng, params.lambda);
            state = 1;
        } else {
            t += exponential(rng, busy_rate);
            let u: f64 = rng.random();
            if u <= p_next {
                state += 1;
            } else {
                state -= 1;
            }
        }
        if t >= horizon {
            break;
        }
        times.push(t);
        states.push(state);
    }
    Ok(StatePath {
        times,
        states,
        horizon,
    })
}

/// Converts a count path into job pairs, matching departures to the oldest
/// present job. Initial jobs leave first.
pub fn path_to_trace(path: &StatePath) -> Result<BackgroundTrace> {
    let initial = path.states[0];
    let mut remaining_initial = initial;
    let mut initial_departures = Vec::new();
    let mut open: std::collections::VecDeque<usize> = Default::default();
    let mut jobs: Vec<BackgroundJob> = Vec::new();
    for k in 1..path.states.len() {
        let t = path.times[k];
        if path.states[k] > path.states[k - 1] {
            open.push_back(jobs.len());
            jobs.push(BackgroundJob {
                arrival: t,
                departure: f64::INFINITY,
            });
        } else if remaining_initial > 0 {
            remaining_initial -= 1;
            initial_departures.push(t);
        } else {
            let idx = open.pop_front().expect("departure without a present job");
            jobs[idx].departure = t;
        }
    }
    BackgroundTrace::with_initial(jobs, initial, initial_departures, path.horizon)
}

/// Draws one background trace from the M/M/1 walk.
pub fn simulate_background(params: &MM1Params, horizon: f64, seed: u64) -> Result<BackgroundTrace> {
    let mut rng = crate::rng::stream_rng(seed, 0, 0);
    simulate_background_with(params, horizon, &mut rng)
}

pub fn simulate_background_with(
    params: &MM1Params,
    horizon: f64,
    rng: &mut TrialRng,
) -> Result<BackgroundTrace> {
    path_to_trace(&simulate_path(params, horizon, rng)?)
}

/// Equivalent inverse speed from the stationary mean job count:
/// `hv(n_bar + 1) * base_w` with `n_bar = rho / (1 - rho)`. Table
/// hypervisors are interpolated linearly between integer job counts.
pub fn baseline_wbar(params: &MM1Params, base_w: f64, hv: &HypervisorFunction) -> Result<f64> {
    params.validate()?;
    let jobs = params.mean_jobs()? + 1.0;
    let factor = match hv {
        HypervisorFunction::EvenSplit => jobs,
        HypervisorFunction::Table { .. } => {
            let lo = jobs.floor() as usize;
            let frac = jobs - lo as f64;
            let m_lo = hv.multiplier(lo)?;
            if frac == 0.0 {
                m_lo
            } else {
                m_lo + frac * (hv.multiplier(lo + 1)? - m_lo)
            }
        }
    };
    Ok(factor * base_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn estimator_examples() {
        let w = FadingWindow::uniform(vec![2.0; 4]).unwrap();
        assert_eq!(estimate_lambda(&w), 0.5);
        assert_eq!(estimate_mu(&w), 0.5);

        let w = FadingWindow::new(vec![2.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(estimate_lambda(&w), 0.75);
        assert_eq!(estimate_mu(&w), 0.75);

        let xs = vec![0.3, 1.7, 2.2, 0.9, 4.0];
        let w = FadingWindow::uniform(xs.clone()).unwrap();
        assert_eq!(estimate_lambda(&w), 5.0 / xs.iter().sum::<f64>());
    }

    #[test]
    fn window_validation() {
        assert!(FadingWindow::uniform(vec![]).is_err());
        assert!(FadingWindow::new(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(FadingWindow::new(vec![1.0, 2.0], vec![2.0, 1.0]).is_err());
        assert!(FadingWindow::new(vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(FadingWindow::geometric(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn geometric_weights_ascend_to_one() {
        let w = FadingWindow::geometric(vec![1.0, 1.0, 1.0], 0.5).unwrap();
        assert_eq!(w.weights(), &[0.25, 0.5, 1.0]);
        let w = FadingWindow::latest(&[9.0, 1.0, 2.0, 3.0], 3, 0.95).unwrap();
        assert_eq!(w.samples(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn baseline_examples() {
        let hv = HypervisorFunction::EvenSplit;
        let p = MM1Params::new(0.1, 0.125, 0).unwrap();
        assert!((p.rho() - 0.8).abs() < 1e-15);
        assert!((baseline_wbar(&p, 1.0, &hv).unwrap() - 5.0).abs() < 1e-12);

        let idle = MM1Params::new(1e-12, 1.0, 0).unwrap();
        assert!((baseline_wbar(&idle, 3.0, &hv).unwrap() - 3.0).abs() < 1e-9);

        let half = MM1Params::new(0.5, 1.0, 0).unwrap();
        assert!((baseline_wbar(&half, 2.0, &hv).unwrap() - 4.0).abs() < 1e-12);

        let critical = MM1Params::new(1.0, 1.0, 0).unwrap();
        assert!(matches!(
            baseline_wbar(&critical, 1.0, &hv),
            Err(Error::UnstableQueue { .. })
        ));
    }

    #[test]
    fn baseline_interpolates_tables() {
        let hv = HypervisorFunction::table(vec![1.0, 1.5, 3.0]).unwrap();
        let half = MM1Params::new(1.0, 3.0, 0).unwrap(); // n_bar = 0.5
        assert!((baseline_wbar(&half, 2.0, &hv).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn no_arrivals_stay_empty() {
        let p = MM1Params::new(1e-12, 0.125, 0).unwrap();
        let trace = simulate_background(&p, 1000.0, 3).unwrap();
        assert!(trace.jobs().is_empty());
        assert_eq!(trace.count_at(999.0), 0);
    }

    #[test]
    fn path_moves_by_one_and_stays_non_negative() {
        let p = MM1Params::new(0.3, 0.4, 2).unwrap();
        let mut rng = stream_rng(5, 0, 0);
        let path = simulate_path(&p, 500.0, &mut rng).unwrap();
        assert_eq!(path.states[0], 2);
        for w in path.states.windows(2) {
            assert_eq!((w[0] as i64 - w[1] as i64).abs(), 1);
        }
        assert!(path.times.windows(2).all(|w| w[1] > w[0]));
        assert!(*path.times.last().unwrap() < 500.0);
    }

    #[test]
    fn trace_reproduces_path_counts() {
        let p = MM1Params::new(0.5, 0.6, 3).unwrap();
        let mut rng = stream_rng(11, 2, 1);
        let path = simulate_path(&p, 200.0, &mut rng).unwrap();
        let trace = path_to_trace(&path).unwrap();
        for k in 0..path.times.len() {
            let t = path.times[k];
            assert_eq!(trace.count_at(t), path.states[k], "at {t}");
        }
        assert_eq!(trace.initial_jobs(), 3);
    }

    #[test]
    fn same_seed_same_trace() {
        let p = MM1Params::new(0.1, 0.125, 0).unwrap();
        let a = simulate_background(&p, 50.0, 42).unwrap();
        let b = simulate_background(&p, 50.0, 42).unwrap();
        assert_eq!(a, b);
    }
}
