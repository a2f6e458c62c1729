//! Closed-form schedule for constant processor and link speeds.

use crate::error::{Error, Result};
use crate::network::{NetworkSpec, Schedule};

/// Solves the constant-speed system for `spec`'s base speeds.
pub fn solve_time_invariant(spec: &NetworkSpec) -> Schedule {
    solve_constant_speeds(spec, spec.base_w(), spec.base_z())
        .expect("spec speeds are validated positive")
}

/// Forward substitution with explicit constant speeds `w` (`N + 1` entries)
/// and `z` (`N` entries).
///
/// Each fraction is linear in `T_f`: `alpha_0 = T_f / (W_0 T_cp)` and, with
/// `T_{i-1} = s T_f`, worker `i` satisfies
/// `T_f = T_{i-1} + alpha_i (Z_i T_cm + W_i T_cp)`. Normalizing the sum of
/// the coefficients gives `T_f`.
pub(crate) fn solve_constant_speeds(spec: &NetworkSpec, w: &[f64], z: &[f64]) -> Result<Schedule> {
    let n = spec.worker_count();
    if w.len() != n + 1 || z.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected {} computing and {} link speeds, got {} and {}",
            n + 1,
            n,
            w.len(),
            z.len()
        )));
    }
    if let Some(v) = w.iter().chain(z).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "equivalent speed {v} must be positive"
        )));
    }
    let (t_cp, t_cm) = (spec.t_cp(), spec.t_cm());

    let mut coeff = Vec::with_capacity(n + 1);
    let mut stage_coeff = Vec::with_capacity(n);
    coeff.push(1.0 / (w[0] * t_cp));
    let mut elapsed = 0.0;
    for i in 1..=n {
        let c = (1.0 - elapsed) / (z[i - 1] * t_cm + w[i] * t_cp);
        elapsed += c * z[i - 1] * t_cm;
        coeff.push(c);
        stage_coeff.push(elapsed);
    }

    let finish_time = 1.0 / coeff.iter().sum::<f64>();
    Ok(Schedule {
        fractions: coeff.iter().map(|c| c * finish_time).collect(),
        stage_times: stage_coeff.iter().map(|c| c * finish_time).collect(),
        finish_time,
    })
}

/// Largest residual of the constant-speed equations relative to `T_f`.
pub fn linear_residual(spec: &NetworkSpec, w: &[f64], z: &[f64], s: &Schedule) -> f64 {
    let tf = s.finish_time;
    let mut worst = (s.fractions[0] * w[0] * spec.t_cp() - tf).abs();
    let mut comm = 0.0;
    for i in 1..s.fractions.len() {
        comm += s.fractions[i] * z[i - 1] * spec.t_cm();
        worst = worst.max((comm + s.fractions[i] * w[i] * spec.t_cp() - tf).abs());
        worst = worst.max((comm - s.stage_times[i - 1]).abs());
    }
    (worst / tf).max((s.fraction_sum() - 1.0).abs())
}
