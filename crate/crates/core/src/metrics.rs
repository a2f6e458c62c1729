//! Speedup against a single-processor reference.

use crate::deterministic::SpeedProfiles;
use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::profile::StepProfile;

pub fn speedup(t_fs: f64, t_fp: f64) -> Result<f64> {
    if !(t_fs > 0.0) || !(t_fp > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "finishing times must be positive (sequential {t_fs}, parallel {t_fp})"
        )));
    }
    Ok(t_fs / t_fp)
}

/// Whole load on a constant-speed control processor.
pub fn sequential_time_invariant(w: f64, t_cp: f64) -> f64 {
    w * t_cp
}

/// Whole load on a time-varying control processor: the `T` at which
/// `(1/T_cp) * integral of 1/W_0 over [0, T]` reaches one.
pub fn sequential_time_varying(w0_profile: &StepProfile, t_cp: f64) -> Result<f64> {
    if !(t_cp > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "T_cp = {t_cp} must be positive"
        )));
    }
    w0_profile.time_to_accumulate(0.0, t_cp)
}

/// Makespan of a fixed load split when it runs against `profiles`: `P_0`
/// sends each worker its share in turn while computing its own, and every
/// worker starts once its share has arrived.
pub fn realized_finish_time(
    spec: &NetworkSpec,
    profiles: &SpeedProfiles,
    fractions: &[f64],
) -> Result<f64> {
    if fractions.len() != spec.processor_count() {
        return Err(Error::InvalidParameter(format!(
            "{} fractions for {} processors",
            fractions.len(),
            spec.processor_count()
        )));
    }
    if fractions.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::InvalidParameter(
            "fractions must be nonnegative".into(),
        ));
    }
    let mut makespan = profiles.w[0].time_to_accumulate(0.0, fractions[0] * spec.t_cp())?;
    let mut sent = 0.0;
    for ((alpha, z), w) in fractions[1..].iter().zip(&profiles.z).zip(&profiles.w[1..]) {
        sent = z.time_to_accumulate(sent, alpha * spec.t_cm())?;
        makespan = makespan.max(w.time_to_accumulate(sent, alpha * spec.t_cp())?);
    }
    Ok(makespan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::solve_time_invariant;
    use crate::network::ControlMode;

    #[test]
    fn realized_time_of_optimal_split_is_its_finish_time() {
        let spec = NetworkSpec::new(
            vec![1.0; 4],
            vec![1.1, 1.2, 1.3],
            4.0,
            1.0,
            ControlMode::TimeInvariantControl,
        )
        .unwrap();
        let s = solve_time_invariant(&spec);
        let p = SpeedProfiles::constant(&spec);
        let t = realized_finish_time(&spec, &p, &s.fractions).unwrap();
        assert!((t - s.finish_time).abs() < 1e-12);

        let mut skewed = s.fractions.clone();
        skewed[0] += 0.05;
        skewed[3] -= 0.05;
        assert!(realized_finish_time(&spec, &p, &skewed).unwrap() > s.finish_time);
        assert!(realized_finish_time(&spec, &p, &[1.0]).is_err());
    }

    #[test]
    fn speedup_examples() {
        assert_eq!(speedup(3.0, 3.0).unwrap(), 1.0);
        assert_eq!(speedup(4.0, 2.0).unwrap(), 2.0);
        assert!((speedup(4.0, 1.41).unwrap() - 2.8369).abs() < 1e-4);
        assert!(speedup(0.0, 1.0).is_err());
    }

    #[test]
    fn sequential_examples() {
        assert_eq!(sequential_time_invariant(1.0, 4.0), 4.0);
        assert_eq!(sequential_time_invariant(2.0, 4.0), 8.0);
        assert_eq!(sequential_time_invariant(0.5, 1.0), 0.5);

        let c = StepProfile::constant(2.0).unwrap();
        assert_eq!(sequential_time_varying(&c, 4.0).unwrap(), 8.0);
        assert_eq!(
            sequential_time_varying(&StepProfile::constant(1.5).unwrap(), 4.0).unwrap(),
            sequential_time_invariant(1.5, 4.0)
        );

        let p = StepProfile::new(vec![0.0, 2.0], vec![1.0, 2.0]).unwrap();
        assert!((sequential_time_varying(&p, 4.0).unwrap() - 6.0).abs() < 1e-12);
    }
}
