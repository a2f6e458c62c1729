//! Piecewise-constant inverse-speed profiles and the background-job traces
//! that generate them.
//!
//! A [`StepProfile`] holds `W_i(t)` or `Z_i(t)`: the time needed per unit load
//! (before scaling by `T_cp`/`T_cm`) as seen by the divisible job. Every
//! quantity the solvers need from a profile is an integral of its reciprocal,
//! i.e. of the instantaneous speed, so profiles carry a prefix table of that
//! integral at each breakpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant, strictly positive function of time on `[0, +inf)`.
///
/// `values[k]` holds on `[breakpoints[k], breakpoints[k + 1])`; the last value
/// extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct StepProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    // cumulative[k] = integral of 1/p over [0, breakpoints[k]]
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawProfile> for StepProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        StepProfile::new(raw.breakpoints, raw.values)
    }
}

impl From<StepProfile> for RawProfile {
    fn from(p: StepProfile) -> Self {
        RawProfile {
            breakpoints: p.breakpoints,
            values: p.values,
        }
    }
}

impl StepProfile {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidProfile("no breakpoints".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidProfile(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidProfile(format!(
                "first breakpoint is {}, expected 0",
                breakpoints[0]
            )));
        }
        if let Some(w) = breakpoints
            .windows(2)
            .find(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::InvalidProfile(format!(
                "breakpoints not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "value {v} is not a positive finite number"
            )));
        }

        let mut cumulative = Vec::with_capacity(breakpoints.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for k in 1..breakpoints.len() {
            acc += (breakpoints[k] - breakpoints[k - 1]) / values[k - 1];
            cumulative.push(acc);
        }

        Ok(Self {
            breakpoints,
            values,
            cumulative,
        })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_constant(&self) -> bool {
        self.values.len() == 1
    }

    fn segment(&self, t: f64) -> usize {
        // index of the last breakpoint <= t
        self.breakpoints
            .partition_point(|&b| b <= t)
            .saturating_sub(1)
    }

    /// Value in effect at time `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.segment(t)]
    }

    /// Integral of `1 / p(t)` over `[0, t]`.
    fn cumulative_at(&self, t: f64) -> f64 {
        let k = self.segment(t);
        self.cumulative[k] + (t - self.breakpoints[k]) / self.values[k]
    }

    /// Integral of `1 / p(t)` over `[a, b]`.
    pub fn integrate_reciprocal(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0) || !(b >= a) || !b.is_finite() {
            return Err(Error::InvalidInterval { start: a, end: b });
        }
        if a == b {
            return Ok(0.0);
        }
        Ok(self.cumulative_at(b) - self.cumulative_at(a))
    }

    /// Constant inverse speed with the same effect as the profile over
    /// `[start, finish]`: the interval length over the reciprocal integral.
    pub fn equivalent(&self, start: f64, finish: f64) -> Result<f64> {
        if !(finish > start) {
            return Err(Error::InvalidInterval { start, end: finish });
        }
        let (lo, hi) = self.range_on(start, finish);
        if lo == hi {
            return Ok(lo);
        }
        let integral = self.integrate_reciprocal(start, finish)?;
        Ok((finish - start) / integral)
    }

    /// Earliest `T >= start` with `integral(start, T) == amount`.
    ///
    /// Exact up to float rounding since the integrand is constant per segment.
    pub fn time_to_accumulate(&self, start: f64, amount: f64) -> Result<f64> {
        if !(start >= 0.0) || !start.is_finite() {
            return Err(Error::InvalidInterval {
                start,
                end: f64::NAN,
            });
        }
        if !(amount >= 0.0) || !amount.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "accumulation target {amount} must be finite and non-negative"
            )));
        }
        let target = self.cumulative_at(start) + amount;
        // first breakpoint whose cumulative value exceeds the target
        let k = self.cumulative.partition_point(|&c| c <= target);
        let seg = k.saturating_sub(1).max(self.segment(start));
        let from = self.breakpoints[seg].max(start);
        let base = self.cumulative_at(from);
        Ok(from + (target - base) * self.values[seg])
    }

    /// Smallest and largest value taken on `[a, b)` (or at `a` when `a == b`).
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let first = self.segment(a);
        let last = if b > a {
            // b is excluded: a breakpoint exactly at b does not count
            self.breakpoints
                .partition_point(|&x| x < b)
                .saturating_sub(1)
        } else {
            first
        };
        self.values[first..=last.max(first)]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Free-function form of [`StepProfile::integrate_reciprocal`].
pub fn integrate_reciprocal(p: &StepProfile, a: f64, b: f64) -> Result<f64> {
    p.integrate_reciprocal(a, b)
}

/// Equivalent constant inverse computing speed over a processing window.
pub fn equivalent_w(p: &StepProfile, t_start: f64, t_finish: f64) -> Result<f64> {
    p.equivalent(t_start, t_finish)
}

/// Equivalent constant inverse link speed over a communication window.
pub fn equivalent_z(p: &StepProfile, t_prev: f64, t_i: f64) -> Result<f64> {
    p.equivalent(t_prev, t_i)
}

/// Multiplier applied to a base inverse speed when `n` jobs share a resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypervisorFunction {
    /// `n -> n`: the physical resource is split evenly between jobs.
    #[default]
    EvenSplit,
    /// `multipliers[n - 1]` for `n = 1..=len`; larger counts are rejected.
    Table { multipliers: Vec<f64> },
}

impl HypervisorFunction {
    pub fn table(multipliers: Vec<f64>) -> Result<Self> {
        let hv = HypervisorFunction::Table { multipliers };
        hv.validate()?;
        Ok(hv)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HypervisorFunction::EvenSplit => Ok(()),
            HypervisorFunction::Table { multipliers } => {
                match multipliers.first() {
                    None => return Err(Error::InvalidHypervisor("empty table".into())),
                    Some(&m) if m != 1.0 => {
                        return Err(Error::InvalidHypervisor(format!(
                            "multiplier(1) must be 1, got {m}"
                        )))
                    }
                    _ => {}
                }
                if multipliers
                    .windows(2)
                    .any(|w| !(w[1] >= w[0]) || !w[1].is_finite())
                {
                    return Err(Error::InvalidHypervisor(
                        "multipliers must be finite and nondecreasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn multiplier(&self, jobs: usize) -> Result<f64> {
        if jobs == 0 {
            return Err(Error::MissingMultiplier { jobs });
        }
        match self {
            HypervisorFunction::EvenSplit => Ok(jobs as f64),
            HypervisorFunction::Table { multipliers } => multipliers
                .get(jobs - 1)
                .copied()
                .ok_or(Error::MissingMultiplier { jobs }),
        }
    }
}

/// One background job (or foreign connection) sharing a resource.
///
/// A job still present when the trace ends has an infinite departure time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundJob {
    pub arrival: f64,
    pub departure: f64,
}

/// Arrivals and departures of background jobs on one resource.
///
/// `initial_jobs` are present at `t = 0`; `initial_departures` lists the
/// departure times of those that leave (the rest persist). Beyond `horizon`
/// the job count is held at its horizon value.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundTrace {
    jobs: Vec<BackgroundJob>,
    initial_jobs: usize,
    initial_departures: Vec<f64>,
    horizon: f64,
}

impl BackgroundTrace {
    pub fn new(jobs: Vec<BackgroundJob>, horizon: f64) -> Result<Self> {
        Self::with_initial(jobs, 0, Vec::new(), horizon)
    }

    pub fn empty(horizon: f64) -> Self {
        Self {
            jobs: Vec::new(),
            initial_jobs: 0,
            initial_departures: Vec::new(),
            horizon,
        }
    }

    pub fn from_pairs(pairs: &[(f64, f64)], horizon: f64) -> Result<Self> {
        let jobs = pairs
            .iter()
            .map(|&(arrival, departure)| BackgroundJob { arrival, departure })
            .collect();
        Self::new(jobs, horizon)
    }

    pub fn with_initial(
        jobs: Vec<BackgroundJob>,
        initial_jobs: usize,
        mut initial_departures: Vec<f64>,
        horizon: f64,
    ) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidTrace(format!(
                "horizon {horizon} must be positive"
            )));
        }
        for job in &jobs {
            if !(job.arrival >= 0.0) || !job.arrival.is_finite() {
                return Err(Error::InvalidTrace(format!(
                    "arrival {} must be finite and non-negative",
                    job.arrival
                )));
            }
            if !(job.departure > job.arrival) {
                return Err(Error::InvalidTrace(format!(
                    "departure {} not after arrival {}",
                    job.departure, job.arrival
                )));
            }
        }
        if initial_departures.len() > initial_jobs {
            return Err(Error::InvalidTrace(format!(
                "{} initial departures for {} initial jobs",
                initial_departures.len(),
                initial_jobs
            )));
        }
        if initial_departures.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidTrace(
                "initial departures must be positive".into(),
            ));
        }
        initial_departures.sort_by(f64::total_cmp);
        Ok(Self {
            jobs,
            initial_jobs,
            initial_departures,
            horizon,
        })
    }

    pub fn jobs(&self) -> &[BackgroundJob] {
        &self.jobs
    }

    pub fn initial_jobs(&self) -> usize {
        self.initial_jobs
    }

    pub fn initial_departures(&self) -> &[f64] {
        &self.initial_departures
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Job count as a step function: `(time, count)` pairs starting at 0,
    /// with simultaneous events merged and no-op steps dropped.
    pub fn count_steps(&self) -> Vec<(f64, usize)> {
        let mut events: Vec<(f64, i64)> = Vec::with_capacity(2 * self.jobs.len());
        for job in &self.jobs {
            if job.arrival <= self.horizon {
                events.push((job.arrival, 1));
                if job.departure <= self.horizon {
                    events.push((job.departure, -1));
                }
            }
        }
        for &d in &self.initial_departures {
            if d <= self.horizon {
                events.push((d, -1));
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut steps = vec![(0.0, self.initial_jobs)];
        let mut count = self.initial_jobs as i64;
        let mut i = 0;
        while i < events.len() {
            let t = events[i].0;
            while i < events.len() && events[i].0 == t {
                count += events[i].1;
                i += 1;
            }
            debug_assert!(count >= 0, "job count went negative at {t}");
            let count = count.max(0) as usize;
            let last = steps.last_mut().expect("non-empty");
            if t == last.0 {
                last.1 = count;
            } else if count != last.1 {
                steps.push((t, count));
            }
        }
        // drop a merged step that ended up equal to its predecessor
        steps.dedup_by(|b, a| a.1 == b.1);
        steps
    }

    /// Number of background jobs present at `t`.
    pub fn count_at(&self, t: f64) -> usize {
        let steps = self.count_steps();
        let k = steps.partition_point(|s| s.0 <= t).saturating_sub(1);
        steps[k].1
    }
}

/// Inverse-speed profile seen by the divisible job: `base * hv(n(t) + 1)`,
/// where `n(t)` counts background jobs and the `+ 1` is the job itself.
pub fn trace_to_profile(
    trace: &BackgroundTrace,
    base: f64,
    hv: &HypervisorFunction,
) -> Result<StepProfile> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "base inverse speed {base} must be positive"
        )));
    }
    let steps = trace.count_steps();
    let mut breakpoints = Vec::with_capacity(steps.len());
    let mut values: Vec<f64> = Vec::with_capacity(steps.len());
    for (t, n) in steps {
        let v = base * hv.multiplier(n + 1)?;
        // a table hypervisor can map different counts to the same speed
        if values.last() == Some(&v) {
            continue;
        }
        breakpoints.push(t);
        values.push(v);
    }
    StepProfile::new(breakpoints, values)
}
