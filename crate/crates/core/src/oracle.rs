//! Slot-by-slot replay of a schedule against its speed profiles.
//!
//! The replay does not use the profiles' integrals: it steps a global grid
//! of width `slot`, reads the inverse speed at the start of each slot and
//! moves load at the corresponding rate. It is an independent check on the
//! recursive solvers.

use serde::Serialize;

use crate::deterministic::SpeedProfiles;
use crate::error::{Error, Result};
use crate::network::{NetworkSpec, Schedule};
use crate::profile::StepProfile;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessorReplay {
    pub processor: usize,
    pub fraction: f64,
    /// Load delivered over the communication window (the full fraction for `P_0`).
    pub received: f64,
    /// Load processed between the stage time and `T_f`.
    pub processed: f64,
    /// Time at which the received load is fully processed.
    pub finish_time: f64,
    /// `max(|processed - fraction|, |received - fraction|)`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub slot: f64,
    pub finish_time: f64,
    pub processors: Vec<ProcessorReplay>,
}

impl ReplayReport {
    pub fn max_residual(&self) -> f64 {
        self.processors
            .iter()
            .map(|p| p.residual)
            .fold(0.0, f64::max)
    }

    pub fn max_finish_error(&self) -> f64 {
        self.processors
            .iter()
            .map(|p| (p.finish_time - self.finish_time).abs())
            .fold(0.0, f64::max)
    }

    /// Processors whose residual exceeds `tol`.
    pub fn flagged(&self, tol: f64) -> Vec<usize> {
        self.processors
            .iter()
            .filter(|p| p.residual > tol)
            .map(|p| p.processor)
            .collect()
    }
}

/// Rate integrator over a fixed slot grid.
struct SlotClock<'a> {
    profile: &'a StepProfile,
    slot: f64,
    scale: f64,
}

impl SlotClock<'_> {
    fn rate_at(&self, t: f64) -> f64 {
        1.0 / (self.profile.value_at(t) * self.scale)
    }

    /// Load moved over `[a, b]`.
    fn amount(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut k = (a / self.slot).floor() as u64;
        let mut t = a;
        while t < b {
            let slot_start = k as f64 * self.slot;
            let slot_end = ((k + 1) as f64 * self.slot).min(b);
            if slot_end > t {
                total += (slot_end - t) * self.rate_at(slot_start);
                t = slot_end;
            }
            k += 1;
        }
        total
    }

    /// Time at which `load` has been moved starting from `start`.
    fn time_to_move(&self, start: f64, load: f64) -> f64 {
        if load <= 0.0 {
            return start;
        }
        let mut remaining = load;
        let mut k = (start / self.slot).floor() as u64;
        let mut t = start;
        loop {
            let slot_start = k as f64 * self.slot;
            let slot_end = (k + 1) as f64 * self.slot;
            if slot_end > t {
                let rate = self.rate_at(slot_start);
                let capacity = (slot_end - t) * rate;
                if capacity >= remaining {
                    return t + remaining / rate;
                }
                remaining -= capacity;
                t = slot_end;
            }
            k += 1;
        }
    }
}

/// Replays `schedule` at slot granularity and reports per-processor residuals.
pub fn replay_oracle(
    schedule: &Schedule,
    spec: &NetworkSpec,
    profiles: &SpeedProfiles,
    slot: f64,
) -> Result<ReplayReport> {
    if !(slot > 0.0) || !slot.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "slot {slot} must be positive"
        )));
    }
    let n = spec.worker_count();
    if schedule.fractions.len() != n + 1 || schedule.stage_times.len() != n {
        return Err(Error::InvalidParameter(
            "schedule does not match the network size".into(),
        ));
    }
    let profiles = SpeedProfiles::new(spec, profiles.w.clone(), profiles.z.clone())?;
    let tf = schedule.finish_time;

    let mut processors = Vec::with_capacity(n + 1);
    let control = SlotClock {
        profile: &profiles.w[0],
        slot,
        scale: spec.t_cp(),
    };
    let alpha0 = schedule.fractions[0];
    let processed = control.amount(0.0, tf);
    processors.push(ProcessorReplay {
        processor: 0,
        fraction: alpha0,
        received: alpha0,
        processed,
        finish_time: control.time_to_move(0.0, alpha0),
        residual: (processed - alpha0).abs(),
    });

    for i in 1..=n {
        let link = SlotClock {
            profile: &profiles.z[i - 1],
            slot,
            scale: spec.t_cm(),
        };
        let cpu = SlotClock {
            profile: &profiles.w[i],
            slot,
            scale: spec.t_cp(),
        };
        let (start, stage) = (schedule.window_start(i), schedule.stage_times[i - 1]);
        let alpha = schedule.fractions[i];
        let received = link.amount(start, stage);
        let processed = cpu.amount(stage, tf);
        processors.push(ProcessorReplay {
            processor: i,
            fraction: alpha,
            received,
            processed,
            finish_time: cpu.time_to_move(stage, received),
            residual: (processed - alpha).abs().max((received - alpha).abs()),
        });
    }

    Ok(ReplayReport {
        slot,
        finish_time: tf,
        processors,
    })
}
