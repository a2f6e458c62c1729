//! Recursive solvers for known, time-varying speed profiles.
//!
//! For a candidate finishing time `T_f`, every fraction is fixed by a chain
//! of stage equations: worker `i` starts computing at the `T_i` where the
//! load received over `[T_{i-1}, T_i]` equals what it can process over
//! `[T_i, T_f]`. The sum of fractions is nondecreasing in `T_f`, and the
//! solution is the `T_f` where it reaches one. Two outer searches are
//! provided: a downward sweep on a fixed grid starting from the sequential
//! bound, and bisection.

use serde::{Deserialize, Serialize};

use crate::classic::solve_constant_speeds;
use crate::error::{Error, Result};
use crate::network::{ControlMode, NetworkSpec, Schedule};
use crate::profile::StepProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// Decrease `T_f` from its upper bound in fixed steps until the sum of
    /// fractions drops below one, then refine inside the bracket.
    SweepDown,
    #[default]
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub mode: SolveMode,
    pub sweep_step: f64,
    pub sum_tolerance: f64,
    pub stage_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mode: SolveMode::Bisection,
            sweep_step: 0.01,
            sum_tolerance: 1e-10,
            stage_tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

impl SolverOptions {
    pub fn sweep() -> Self {
        Self {
            mode: SolveMode::SweepDown,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sweep_step > 0.0
            && self.sweep_step.is_finite()
            && self.sum_tolerance > 0.0
            && self.stage_tolerance > 0.0
            && self.max_iterations > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "bad solver options {self:?}"
            )))
        }
    }
}

/// Inverse-speed profiles for every processor (`w`, `N + 1` entries) and
/// link (`z`, `N` entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfiles {
    pub w: Vec<StepProfile>,
    pub z: Vec<StepProfile>,
}

impl SpeedProfiles {
    pub fn new(spec: &NetworkSpec, w: Vec<StepProfile>, z: Vec<StepProfile>) -> Result<Self> {
        let n = spec.worker_count();
        if w.len() != n + 1 || z.len() != n {
            return Err(Error::InvalidParameter(format!(
                "expected {} computing and {} link profiles, got {} and {}",
                n + 1,
                n,
                w.len(),
                z.len()
            )));
        }
        Ok(Self { w, z })
    }

    /// Every profile constant at the spec's base speed.
    pub fn constant(spec: &NetworkSpec) -> Self {
        let c = |v: f64| StepProfile::constant(v).expect("validated speed");
        Self {
            w: spec.base_w().iter().map(|&v| c(v)).collect(),
            z: spec.base_z().iter().map(|&v| c(v)).collect(),
        }
    }

    /// Constant control processor and links, varying workers.
    pub fn with_worker_profiles(spec: &NetworkSpec, workers: Vec<StepProfile>) -> Result<Self> {
        if workers.len() != spec.worker_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} worker profiles, got {}",
                spec.worker_count(),
                workers.len()
            )));
        }
        let mut all = Self::constant(spec);
        all.w.truncate(1);
        all.w.extend(workers);
        Ok(all)
    }

    pub fn is_constant(&self) -> bool {
        self.w.iter().chain(&self.z).all(StepProfile::is_constant)
    }
}

/// Stage start time `T_i` of worker `i` (1-based) for a candidate `T_f`.
///
/// Solves `received(T) = processed(T)` by bisection, where
/// `received(T) = (1/T_cm) * integral of 1/Z_i over [t_prev, T]` and
/// `processed(T) = (1/T_cp) * integral of 1/W_i over [T, t_f]`. This is the
/// stage equation `T_f = T + alpha_i * W_bar_i * T_cp` with the equivalent
/// speed written out; the difference is strictly increasing in `T`.
pub fn solve_stage_time(
    t_f: f64,
    t_prev: f64,
    z_profile: &StepProfile,
    w_profile: &StepProfile,
    spec: &NetworkSpec,
    i: usize,
    opts: &SolverOptions,
) -> Result<f64> {
    if !(t_prev < t_f) || !(t_prev >= 0.0) {
        return Err(Error::Infeasible {
            processor: i,
            t_prev,
            t_finish: t_f,
        });
    }
    let (t_cm, t_cp) = (spec.t_cm(), spec.t_cp());
    let gap = |t: f64| -> Result<f64> {
        Ok(z_profile.integrate_reciprocal(t_prev, t)? / t_cm
            - w_profile.integrate_reciprocal(t, t_f)? / t_cp)
    };

    let (mut lo, mut hi) = (t_prev, t_f);
    if !(gap(lo)? < 0.0 && gap(hi)? > 0.0) {
        return Err(Error::Infeasible {
            processor: i,
            t_prev,
            t_finish: t_f,
        });
    }
    for _ in 0..opts.max_iterations {
        if hi - lo <= opts.stage_tolerance {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = gap(mid)?;
        if g == 0.0 {
            return Ok(mid);
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fractions and stage times implied by one candidate `T_f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPoint {
    pub finish_time: f64,
    pub fractions: Vec<f64>,
    pub stage_times: Vec<f64>,
    pub sum: f64,
}

impl ChainPoint {
    pub fn schedule(&self) -> Schedule {
        Schedule {
            fractions: self.fractions.clone(),
            stage_times: self.stage_times.clone(),
            finish_time: self.finish_time,
        }
    }
}

/// Runs the stage chain for a fixed `T_f`.
pub fn evaluate_chain(
    spec: &NetworkSpec,
    profiles: &SpeedProfiles,
    t_f: f64,
    opts: &SolverOptions,
) -> Result<ChainPoint> {
    let n = spec.worker_count();
    let mut fractions = Vec::with_capacity(n + 1);
    let mut stage_times = Vec::with_capacity(n);
    fractions.push(profiles.w[0].integrate_reciprocal(0.0, t_f)? / spec.t_cp());
    let mut t_prev = 0.0;
    for i in 1..=n {
        let t_i = solve_stage_time(
            t_f,
            t_prev,
            &profiles.z[i - 1],
            &profiles.w[i],
            spec,
            i,
            opts,
        )?;
        fractions.push(profiles.z[i - 1].integrate_reciprocal(t_prev, t_i)? / spec.t_cm());
        stage_times.push(t_i);
        t_prev = t_i;
    }
    let sum = fractions.iter().sum();
    Ok(ChainPoint {
        finish_time: t_f,
        fractions,
        stage_times,
        sum,
    })
}

/// Full result of a recursive solve, including the search trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schedule: Schedule,
    /// Candidate points visited by the sweep, from the upper bound downwards.
    /// Empty in bisection mode.
    pub curve: Vec<ChainPoint>,
    /// Adjacent sweep points whose sums straddle one (`lower.sum < 1 <=
    /// upper.sum`). `None` in bisection mode.
    pub bracket: Option<(ChainPoint, ChainPoint)>,
    pub evaluations: usize,
}

impl SolveReport {
    /// Sweep point whose sum is closest to one.
    pub fn closest_grid_point(&self) -> Option<&ChainPoint> {
        self.bracket.as_ref().map(|(lo, hi)| {
            if (1.0 - lo.sum).abs() <= (hi.sum - 1.0).abs() {
                lo
            } else {
                hi
            }
        })
    }
}

/// Upper bound on `T_f`: the time `P_0` alone needs for the whole load.
fn finish_upper_bound(spec: &NetworkSpec, profiles: &SpeedProfiles) -> Result<f64> {
    profiles.w[0].time_to_accumulate(0.0, spec.t_cp())
}

/// Lower bound on `T_f`: every resource at its fastest level for all time.
fn finish_lower_bound(spec: &NetworkSpec, profiles: &SpeedProfiles) -> Result<f64> {
    let w: Vec<f64> = profiles.w.iter().map(StepProfile::min_value).collect();
    let z: Vec<f64> = profiles.z.iter().map(StepProfile::min_value).collect();
    Ok(solve_constant_speeds(spec, &w, &z)?.finish_time)
}

struct Search<'a> {
    spec: &'a NetworkSpec,
    profiles: &'a SpeedProfiles,
    opts: &'a SolverOptions,
    evaluations: usize,
}

impl Search<'_> {
    fn eval(&mut self, t_f: f64) -> Result<ChainPoint> {
        self.evaluations += 1;
        evaluate_chain(self.spec, self.profiles, t_f, self.opts)
    }

    fn check_order(&self, lo: &ChainPoint, hi: &ChainPoint) -> Result<()> {
        // rounding in the stage bisection can wobble the sum slightly
        let slack = 1e-9 + 10.0 * self.opts.stage_tolerance;
        if lo.finish_time < hi.finish_time && lo.sum > hi.sum + slack {
            return Err(Error::NonMonotone {
                prev_tf: lo.finish_time,
                prev_sum: lo.sum,
                tf: hi.finish_time,
                sum: hi.sum,
            });
        }
        Ok(())
    }

    fn done(&self, p: &ChainPoint) -> bool {
        (p.sum - 1.0).abs() <= self.opts.sum_tolerance
    }

    /// Illinois-modified regula falsi inside a bracket.
    fn refine(&mut self, mut lo: ChainPoint, mut hi: ChainPoint) -> Result<ChainPoint> {
        let (mut lo_res, mut hi_res) = (lo.sum - 1.0, hi.sum - 1.0);
        let mut best = if -lo_res < hi_res {
            lo.clone()
        } else {
            hi.clone()
        };
        let mut side = 0i8;
        for _ in 0..self.opts.max_iterations {
            if self.done(&best) {
                break;
            }
            let width = hi.finish_time - lo.finish_time;
            let mut t = lo.finish_time + width * (-lo_res) / (hi_res - lo_res);
            if !(t > lo.finish_time && t < hi.finish_time) {
                t = 0.5 * (lo.finish_time + hi.finish_time);
            }
            if t <= lo.finish_time || t >= hi.finish_time {
                break;
            }
            let p = self.eval(t)?;
            self.check_order(&lo, &p)?;
            self.check_order(&p, &hi)?;
            let res = p.sum - 1.0;
            if (res).abs() < (best.sum - 1.0).abs() {
                best = p.clone();
            }
            if res < 0.0 {
                lo = p;
                lo_res = res;
                if side == -1 {
                    hi_res *= 0.5;
                }
                side = -1;
            } else {
                hi = p;
                hi_res = res;
                if side == 1 {
                    lo_res *= 0.5;
                }
                side = 1;
            }
        }
        Ok(best)
    }

    fn bisect(&mut self, lower: f64, upper: f64) -> Result<ChainPoint> {
        let mut hi = self.eval(upper)?;
        if self.done(&hi) {
            return Ok(hi);
        }
        let mut lo = if lower > 0.0 {
            self.eval(lower)?
        } else {
            ChainPoint {
                finish_time: 0.0,
                fractions: vec![0.0; self.spec.processor_count()],
                stage_times: vec![0.0; self.spec.worker_count()],
                sum: 0.0,
            }
        };
        if lo.sum > 1.0 {
            // bound too optimistic for these profiles; fall back to zero
            return self.bisect(0.0, upper);
        }
        if hi.sum < 1.0 {
            return Err(Error::NoBracket { lower, upper });
        }
        let mut best = hi.clone();
        for _ in 0..self.opts.max_iterations {
            if self.done(&best) {
                break;
            }
            let mid = 0.5 * (lo.finish_time + hi.finish_time);
            if mid <= lo.finish_time || mid >= hi.finish_time {
                break;
            }
            let p = self.eval(mid)?;
            self.check_order(&lo, &p)?;
            self.check_order(&p, &hi)?;
            if (p.sum - 1.0).abs() < (best.sum - 1.0).abs() {
                best = p.clone();
            }
            if p.sum < 1.0 {
                lo = p;
            } else {
                hi = p;
            }
        }
        Ok(best)
    }

    fn sweep(
        &mut self,
        upper: f64,
    ) -> Result<(ChainPoint, Vec<ChainPoint>, (ChainPoint, ChainPoint))> {
        let step = self.opts.sweep_step;
        // Candidates are multiples of the step, starting at or above `upper`.
        let per_unit = 1.0 / step;
        let integral_grid = (per_unit - per_unit.round()).abs() < 1e-9;
        let grid = |j: f64| {
            if integral_grid {
                j / per_unit.round()
            } else {
                j * step
            }
        };
        let top = (upper / step - 1e-9).ceil();
        let upper = grid(top);
        let mut curve = vec![self.eval(upper)?];
        if curve[0].sum < 1.0 {
            return Err(Error::NoBracket {
                lower: upper,
                upper,
            });
        }
        let mut k = 1usize;
        loop {
            let t = grid(top - k as f64);
            let prev = curve.last().expect("non-empty").clone();
            if t <= 0.0 {
                return Err(Error::NoBracket { lower: 0.0, upper });
            }
            let p = self.eval(t)?;
            self.check_order(&p, &prev)?;
            curve.push(p.clone());
            if p.sum < 1.0 {
                let bracket = (p.clone(), prev.clone());
                let best = if self.done(&prev) {
                    prev
                } else {
                    self.refine(p, prev)?
                };
                return Ok((best, curve, bracket));
            }
            k += 1;
        }
    }
}

/// Shared driver for both recursive algorithms.
pub fn solve_with_profiles(
    spec: &NetworkSpec,
    profiles: &SpeedProfiles,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    let profiles = SpeedProfiles::new(spec, profiles.w.clone(), profiles.z.clone())?;
    let upper = finish_upper_bound(spec, &profiles)?;
    let mut search = Search {
        spec,
        profiles: &profiles,
        opts,
        evaluations: 0,
    };
    match opts.mode {
        SolveMode::Bisection => {
            let lower = finish_lower_bound(spec, &profiles)?.min(upper);
            let best = search.bisect(lower, upper)?;
            Ok(SolveReport {
                schedule: best.schedule(),
                curve: Vec::new(),
                bracket: None,
                evaluations: search.evaluations,
            })
        }
        SolveMode::SweepDown => {
            let (best, curve, bracket) = search.sweep(upper)?;
            Ok(SolveReport {
                schedule: best.schedule(),
                curve,
                bracket: Some(bracket),
                evaluations: search.evaluations,
            })
        }
    }
}

/// Time-varying workers, constant control processor and links.
///
/// `worker_w_profiles[i - 1]` is `W_i(t)`.
pub fn algorithm_one(
    spec: &NetworkSpec,
    worker_w_profiles: &[StepProfile],
    opts: &SolverOptions,
) -> Result<Schedule> {
    Ok(algorithm_one_report(spec, worker_w_profiles, opts)?.schedule)
}

pub fn algorithm_one_report(
    spec: &NetworkSpec,
    worker_w_profiles: &[StepProfile],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if spec.control_mode() != ControlMode::TimeInvariantControl {
        return Err(Error::InvalidSpec(
            "algorithm one needs a time-invariant control processor".into(),
        ));
    }
    let profiles = SpeedProfiles::with_worker_profiles(spec, worker_w_profiles.to_vec())?;
    solve_with_profiles(spec, &profiles, opts)
}

/// Every processor and link time-varying.
pub fn algorithm_two(
    spec: &NetworkSpec,
    w_profiles: &[StepProfile],
    z_profiles: &[StepProfile],
    opts: &SolverOptions,
) -> Result<Schedule> {
    Ok(algorithm_two_report(spec, w_profiles, z_profiles, opts)?.schedule)
}

pub fn algorithm_two_report(
    spec: &NetworkSpec,
    w_profiles: &[StepProfile],
    z_profiles: &[StepProfile],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if spec.control_mode() != ControlMode::TimeVaryingControl {
        return Err(Error::InvalidSpec(
            "algorithm two needs a time-varying control mode".into(),
        ));
    }
    let profiles = SpeedProfiles::new(spec, w_profiles.to_vec(), z_profiles.to_vec())?;
    solve_with_profiles(spec, &profiles, opts)
}

/// Dispatches on the spec's control mode.
pub fn solve(
    spec: &NetworkSpec,
    profiles: &SpeedProfiles,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    match spec.control_mode() {
        ControlMode::TimeInvariantControl => {
            let constant_control =
                profiles.w[0].is_constant() && profiles.z.iter().all(StepProfile::is_constant);
            if !constant_control {
                return Err(Error::InvalidSpec(
                    "time-invariant control mode with varying control or link profiles".into(),
                ));
            }
            solve_with_profiles(spec, profiles, opts)
        }
        ControlMode::TimeVaryingControl => solve_with_profiles(spec, profiles, opts),
    }
}

/// Largest residual of the time-varying system for `schedule`, relative to
/// `T_f` for the timing equations.
pub fn system_residual(spec: &NetworkSpec, profiles: &SpeedProfiles, s: &Schedule) -> Result<f64> {
    let tf = s.finish_time;
    let mut worst =
        (s.fractions[0] - profiles.w[0].integrate_reciprocal(0.0, tf)? / spec.t_cp()).abs();
    for i in 1..s.fractions.len() {
        let (t_prev, t_i) = (s.window_start(i), s.stage_times[i - 1]);
        let received = profiles.z[i - 1].integrate_reciprocal(t_prev, t_i)? / spec.t_cm();
        let processed = profiles.w[i].integrate_reciprocal(t_i, tf)? / spec.t_cp();
        worst = worst.max((received - s.fractions[i]).abs());
        // computing side expressed as a time error: T_f - T_i - alpha_i W_bar_i T_cp
        if t_i < tf {
            let w_bar = profiles.w[i].equivalent(t_i, tf)?;
            worst = worst.max((tf - t_i - s.fractions[i] * w_bar * spec.t_cp()).abs() / tf);
        } else {
            worst = worst.max(processed.abs());
        }
    }
    Ok(worst.max((s.fraction_sum() - 1.0).abs()))
}
