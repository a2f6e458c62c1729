use std::ffi::CStr;
use std::ptr;

use divload_ffi::*;

fn table_network() -> *mut DivloadNetwork {
    let w = [1.0; 4];
    let z = [1.1, 1.2, 1.3];
    let mut net = ptr::null_mut();
    let st = unsafe { divload_network_new(w.as_ptr(), 4, z.as_ptr(), 3, 4.0, 1.0, 0, &mut net) };
    assert_eq!(st, DivloadStatus::Ok);
    net
}

fn constant(v: f64) -> *mut DivloadProfile {
    let mut p = ptr::null_mut();
    let st = unsafe { divload_profile_new([0.0].as_ptr(), [v].as_ptr(), 1, &mut p) };
    assert_eq!(st, DivloadStatus::Ok);
    p
}

fn last_error() -> String {
    let p = divload_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn closed_form_through_handles() {
    let net = table_network();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(divload_solve_time_invariant(net, &mut s), DivloadStatus::Ok);
        assert!((divload_schedule_finish_time(s) - 1.4070).abs() < 5e-5);
        assert_eq!(divload_schedule_processor_count(s), 4);
        let mut alpha = [0.0; 4];
        assert_eq!(
            divload_schedule_fractions(s, alpha.as_mut_ptr(), 4),
            DivloadStatus::Ok
        );
        assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut short = [0.0; 2];
        assert_eq!(
            divload_schedule_stage_times(s, short.as_mut_ptr(), 2),
            DivloadStatus::BufferTooSmall
        );
        let mut stages = [0.0; 3];
        assert_eq!(
            divload_schedule_stage_times(s, stages.as_mut_ptr(), 3),
            DivloadStatus::Ok
        );
        assert!(stages.windows(2).all(|p| p[0] < p[1]));
        divload_schedule_free(s);
        divload_network_free(net);
    }
}

#[test]
fn recursive_solve_and_replay() {
    let net = table_network();
    let mut slow = ptr::null_mut();
    let st = unsafe { divload_profile_new([0.0, 0.5].as_ptr(), [1.0, 2.0].as_ptr(), 2, &mut slow) };
    assert_eq!(st, DivloadStatus::Ok);
    let (w0, w2, w3) = (constant(1.0), constant(1.0), constant(1.0));
    let (z1, z2, z3) = (constant(1.1), constant(1.2), constant(1.3));
    let w = [
        w0 as *const _,
        slow as *const _,
        w2 as *const _,
        w3 as *const _,
    ];
    let z = [z1 as *const _, z2 as *const _, z3 as *const _];
    unsafe {
        let mut s = ptr::null_mut();
        let st = divload_solve(
            net,
            w.as_ptr(),
            4,
            z.as_ptr(),
            3,
            DivloadMode::Bisection,
            &mut s,
        );
        assert_eq!(st, DivloadStatus::Ok);
        assert!(divload_schedule_finish_time(s) > 1.4070);
        let mut residual = f64::NAN;
        let st = divload_replay_residual(s, net, w.as_ptr(), 4, z.as_ptr(), 3, 1e-4, &mut residual);
        assert_eq!(st, DivloadStatus::Ok);
        assert!(residual < 1e-3, "{residual}");

        // a time-varying link is rejected under a time-invariant control processor
        let zv = [slow as *const _, z2 as *const _, z3 as *const _];
        let mut t = ptr::null_mut();
        let st = divload_solve(
            net,
            w.as_ptr(),
            4,
            zv.as_ptr(),
            3,
            DivloadMode::SweepDown,
            &mut t,
        );
        assert_eq!(st, DivloadStatus::InvalidSpec);
        assert!(t.is_null());

        let mut eq = 0.0;
        assert_eq!(
            divload_profile_equivalent(slow, 0.0, 1.0, &mut eq),
            DivloadStatus::Ok
        );
        assert!((eq - 4.0 / 3.0).abs() < 1e-12);

        divload_schedule_free(s);
        for p in [w0, slow, w2, w3, z1, z2, z3] {
            divload_profile_free(p);
        }
        divload_network_free(net);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut net = ptr::null_mut();
    let st = unsafe {
        divload_network_new(
            [1.0, 1.0].as_ptr(),
            2,
            ptr::null(),
            0,
            4.0,
            1.0,
            0,
            &mut net,
        )
    };
    assert_eq!(st, DivloadStatus::InvalidSpec);
    assert!(net.is_null());
    assert!(!last_error().is_empty());

    let mut p = ptr::null_mut();
    let st = unsafe { divload_profile_new([0.0].as_ptr(), [-1.0].as_ptr(), 1, &mut p) };
    assert_eq!(st, DivloadStatus::InvalidProfile);

    let st = unsafe { divload_solve_time_invariant(ptr::null(), &mut ptr::null_mut()) };
    assert_eq!(st, DivloadStatus::NullPointer);
    assert!(last_error().contains("network"));

    unsafe {
        assert!(divload_schedule_finish_time(ptr::null()).is_nan());
        assert_eq!(divload_schedule_processor_count(ptr::null()), 0);
        divload_schedule_free(ptr::null_mut());
        divload_profile_free(ptr::null_mut());
        divload_network_free(ptr::null_mut());
    }
}
