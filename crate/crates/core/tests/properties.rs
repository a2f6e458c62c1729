use proptest::prelude::*;

use divload::harness::csv::quantile;
use divload::mm1::FadingWindow;
use divload::{
    replay_oracle, solve, solve_time_invariant, ControlMode, NetworkSpec, SolverOptions,
    SpeedProfiles, StepProfile,
};

fn profile_strategy() -> impl Strategy<Value = StepProfile> {
    (1usize..8)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.05f64..2.0, k - 1),
                prop::collection::vec(0.2f64..5.0, k),
            )
        })
        .prop_map(|(gaps, values)| {
            let mut b = vec![0.0];
            for g in gaps {
                b.push(b.last().unwrap() + g);
            }
            StepProfile::new(b, values).unwrap()
        })
}

fn spec_strategy() -> impl Strategy<Value = NetworkSpec> {
    (1usize..7)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.5f64..3.0, n + 1),
                prop::collection::vec(0.1f64..2.0, n),
                1.0f64..6.0,
                0.2f64..2.0,
            )
        })
        .prop_map(|(w, z, t_cp, t_cm)| {
            NetworkSpec::new(w, z, t_cp, t_cm, ControlMode::TimeInvariantControl).unwrap()
        })
}

proptest! {
    #[test]
    fn integral_is_additive(p in profile_strategy(), a in 0.0f64..5.0, d1 in 0.0f64..5.0, d2 in 0.0f64..5.0) {
        let (b, c) = (a + d1, a + d1 + d2);
        let whole = p.integrate_reciprocal(a, c).unwrap();
        let parts = p.integrate_reciprocal(a, b).unwrap() + p.integrate_reciprocal(b, c).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1.0));
    }

    #[test]
    fn equivalent_lies_within_range(p in profile_strategy(), a in 0.0f64..5.0, d in 0.001f64..5.0) {
        let eq = p.equivalent(a, a + d).unwrap();
        let (lo, hi) = p.range_on(a, a + d);
        prop_assert!(eq >= lo * (1.0 - 1e-12) && eq <= hi * (1.0 + 1e-12));
        prop_assert!(eq >= p.min_value() * (1.0 - 1e-12) && eq <= p.max_value() * (1.0 + 1e-12));
    }

    #[test]
    fn accumulate_inverts_integral(p in profile_strategy(), a in 0.0f64..5.0, amount in 0.0f64..10.0) {
        let t = p.time_to_accumulate(a, amount).unwrap();
        prop_assert!(t >= a);
        let back = p.integrate_reciprocal(a, t).unwrap();
        prop_assert!((back - amount).abs() <= 1e-9 * amount.max(1.0));
    }

    #[test]
    fn adding_a_worker_never_slows_the_closed_form(spec in spec_strategy(), w in 0.5f64..3.0, z in 0.1f64..2.0) {
        let before = solve_time_invariant(&spec).finish_time;
        let after = solve_time_invariant(&spec.with_extra_worker(w, z).unwrap()).finish_time;
        prop_assert!(after < before);
    }

    #[test]
    fn closed_form_invariants(spec in spec_strategy()) {
        let s = solve_time_invariant(&spec);
        prop_assert!((s.fraction_sum() - 1.0).abs() < 1e-12);
        prop_assert!(s.fractions.iter().all(|&a| a > 0.0));
        prop_assert!(s.stage_times.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.check_invariants(1e-9).is_ok());
    }

    #[test]
    fn recursive_solution_replays(spec in spec_strategy(), workers in prop::collection::vec(profile_strategy(), 6)) {
        let n = spec.worker_count();
        let mut w = vec![StepProfile::constant(spec.base_w()[0]).unwrap()];
        w.extend(workers.into_iter().take(n));
        let z = spec.base_z().iter().map(|&v| StepProfile::constant(v).unwrap()).collect();
        let profiles = SpeedProfiles::new(&spec, w, z).unwrap();
        let s = solve(&spec, &profiles, &SolverOptions::default()).unwrap().schedule;
        prop_assert!((s.fraction_sum() - 1.0).abs() < 1e-8);
        let r = replay_oracle(&s, &spec, &profiles, 1e-4).unwrap();
        prop_assert!(r.max_residual() < 1e-3, "residual {}", r.max_residual());
    }

    #[test]
    fn rate_estimate_scales_inversely(x in prop::collection::vec(0.01f64..50.0, 1..60), c in 0.1f64..10.0, ratio in 0.5f64..1.0) {
        let est = FadingWindow::geometric(x.clone(), ratio).unwrap().rate_estimate();
        let scaled = FadingWindow::geometric(x.iter().map(|v| v * c).collect(), ratio).unwrap().rate_estimate();
        prop_assert!((scaled * c - est).abs() <= 1e-9 * est);
        let lo = 1.0 / x.iter().cloned().fold(f64::MIN, f64::max);
        let hi = 1.0 / x.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!(est >= lo * (1.0 - 1e-12) && est <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn quantiles_are_ordered(mut data in prop::collection::vec(-100.0f64..100.0, 1..50)) {
        data.sort_by(f64::total_cmp);
        let q: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&p| quantile(&data, p)).collect();
        prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(q[0], data[0]);
        prop_assert_eq!(q[4], *data.last().unwrap());
    }
}
