//! Network description and the schedule produced by every solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the control processor `P_0` and the links share their resources
/// with foreign jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Only the workers' computing speeds vary; `P_0` and links are constant.
    #[default]
    TimeInvariantControl,
    /// `P_0`'s computing speed and every link speed vary as well.
    TimeVaryingControl,
}

/// Single-level tree: control processor `P_0` plus `N` workers served in
/// index order over dedicated links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct NetworkSpec {
    base_w: Vec<f64>,
    base_z: Vec<f64>,
    t_cp: f64,
    t_cm: f64,
    control_mode: ControlMode,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    base_w: Vec<f64>,
    base_z: Vec<f64>,
    t_cp: f64,
    t_cm: f64,
    #[serde(default)]
    control_mode: ControlMode,
}

impl TryFrom<RawSpec> for NetworkSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        NetworkSpec::new(r.base_w, r.base_z, r.t_cp, r.t_cm, r.control_mode)
    }
}

impl From<NetworkSpec> for RawSpec {
    fn from(s: NetworkSpec) -> Self {
        RawSpec {
            base_w: s.base_w,
            base_z: s.base_z,
            t_cp: s.t_cp,
            t_cm: s.t_cm,
            control_mode: s.control_mode,
        }
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl NetworkSpec {
    /// `base_w` holds `W_0..W_N`, `base_z` holds `Z_1..Z_N`.
    pub fn new(
        base_w: Vec<f64>,
        base_z: Vec<f64>,
        t_cp: f64,
        t_cm: f64,
        control_mode: ControlMode,
    ) -> Result<Self> {
        if base_z.is_empty() {
            return Err(Error::InvalidSpec("at least one worker is required".into()));
        }
        if base_w.len() != base_z.len() + 1 {
            return Err(Error::InvalidSpec(format!(
                "{} computing speeds for {} workers (expected N + 1)",
                base_w.len(),
                base_z.len()
            )));
        }
        if !base_w.iter().chain(&base_z).all(|&v| positive(v)) {
            return Err(Error::InvalidSpec("inverse speeds must be positive".into()));
        }
        if !positive(t_cp) || !positive(t_cm) {
            return Err(Error::InvalidSpec("T_cp and T_cm must be positive".into()));
        }
        Ok(Self {
            base_w,
            base_z,
            t_cp,
            t_cm,
            control_mode,
        })
    }

    pub fn worker_count(&self) -> usize {
        self.base_z.len()
    }

    pub fn processor_count(&self) -> usize {
        self.base_w.len()
    }

    pub fn base_w(&self) -> &[f64] {
        &self.base_w
    }

    /// Link speeds; `base_z()[i - 1]` is `Z_i`.
    pub fn base_z(&self) -> &[f64] {
        &self.base_z
    }

    pub fn t_cp(&self) -> f64 {
        self.t_cp
    }

    pub fn t_cm(&self) -> f64 {
        self.t_cm
    }

    pub fn control_mode(&self) -> ControlMode {
        self.control_mode
    }

    pub fn with_control_mode(mut self, mode: ControlMode) -> Self {
        self.control_mode = mode;
        self
    }

    /// Same network with one more worker appended.
    pub fn with_extra_worker(&self, w: f64, z: f64) -> Result<Self> {
        let mut base_w = self.base_w.clone();
        let mut base_z = self.base_z.clone();
        base_w.push(w);
        base_z.push(z);
        Self::new(base_w, base_z, self.t_cp, self.t_cm, self.control_mode)
    }
}

/// Load fractions `alpha_0..alpha_N`, stage times `T_1..T_N` and the
/// finishing time `T_f`.
///
/// `stage_times[i - 1]` is the instant worker `i` finishes receiving its
/// fraction and starts computing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub fractions: Vec<f64>,
    pub stage_times: Vec<f64>,
    pub finish_time: f64,
}

impl Schedule {
    pub fn fraction_sum(&self) -> f64 {
        self.fractions.iter().sum()
    }

    pub fn worker_count(&self) -> usize {
        self.stage_times.len()
    }

    /// Start of worker `i`'s communication window (`T_{i-1}`, with `T_0 = 0`).
    pub fn window_start(&self, i: usize) -> f64 {
        if i <= 1 {
            0.0
        } else {
            self.stage_times[i - 2]
        }
    }

    /// Checks the structural invariants: fractions in `[0, 1]` summing to
    /// one within `sum_tol`, and `0 <= T_1 <= ... <= T_N <= T_f`.
    pub fn check_invariants(&self, sum_tol: f64) -> Result<()> {
        if self.fractions.len() != self.stage_times.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} fractions for {} stages",
                self.fractions.len(),
                self.stage_times.len()
            )));
        }
        if let Some(a) = self.fractions.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidParameter(format!(
                "fraction {a} outside [0, 1]"
            )));
        }
        if (self.fraction_sum() - 1.0).abs() > sum_tol {
            return Err(Error::InvalidParameter(format!(
                "fractions sum to {}",
                self.fraction_sum()
            )));
        }
        let mut prev = 0.0;
        for &t in self
            .stage_times
            .iter()
            .chain(std::iter::once(&self.finish_time))
        {
            if !(t >= prev) {
                return Err(Error::InvalidParameter(format!(
                    "stage times not ordered: {t} after {prev}"
                )));
            }
            prev = t;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shape_and_signs() {
        assert!(NetworkSpec::new(vec![1.0], vec![], 1.0, 1.0, ControlMode::default()).is_err());
        assert!(NetworkSpec::new(vec![1.0], vec![1.0], 1.0, 1.0, ControlMode::default()).is_err());
        assert!(
            NetworkSpec::new(vec![1.0, -1.0], vec![1.0], 1.0, 1.0, ControlMode::default()).is_err()
        );
        assert!(
            NetworkSpec::new(vec![1.0, 1.0], vec![1.0], 0.0, 1.0, ControlMode::default()).is_err()
        );
        let s =
            NetworkSpec::new(vec![1.0, 1.0], vec![1.0], 1.0, 1.0, ControlMode::default()).unwrap();
        assert_eq!(s.worker_count(), 1);
        assert_eq!(s.processor_count(), 2);
    }

    #[test]
    fn json_round_trip_defaults_control_mode() {
        let s: NetworkSpec =
            serde_json::from_str(r#"{"base_w":[1,1],"base_z":[1.1],"t_cp":4,"t_cm":1}"#).unwrap();
        assert_eq!(s.control_mode(), ControlMode::TimeInvariantControl);
        assert!(serde_json::from_str::<NetworkSpec>(
            r#"{"base_w":[1],"base_z":[1.1],"t_cp":4,"t_cm":1}"#
        )
        .is_err());
    }

    #[test]
    fn schedule_invariants() {
        let s = Schedule {
            fractions: vec![0.5, 0.3, 0.2],
            stage_times: vec![0.3, 0.5],
            finish_time: 1.0,
        };
        s.check_invariants(1e-12).unwrap();
        assert_eq!(s.window_start(1), 0.0);
        assert_eq!(s.window_start(2), 0.3);

        let bad = Schedule {
            stage_times: vec![0.5, 0.3],
            ..s.clone()
        };
        assert!(bad.check_invariants(1e-12).is_err());
    }
}
