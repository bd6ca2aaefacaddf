//! Exercises the C ABI through the exported extern "C" functions.

use sel_capi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sel_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn params_lifecycle_and_derived_constants() {
    let mut p: *mut SelParams = ptr::null_mut();
    let st = unsafe { sel_params_new(2.0, 1.0, 1e-3, 0.01, 1.0, 1.0, &mut p) };
    assert_eq!(st, SelStatus::Ok);
    assert!(!p.is_null());

    let mut theta = 0.0;
    let mut kappa = 0.0;
    assert_eq!(unsafe { sel_params_theta(p, &mut theta) }, SelStatus::Ok);
    assert_eq!(unsafe { sel_params_kappa(p, &mut kappa) }, SelStatus::Ok);
    assert_eq!(theta, 0.5);
    assert_eq!(kappa, 0.125);

    let mut pr = 0.0;
    assert_eq!(unsafe { sel_pressure(p, 2.0, &mut pr) }, SelStatus::Ok);
    assert!((pr - 0.5).abs() < 1e-15);
    assert_eq!(unsafe { sel_pressure(p, -1.0, &mut pr) }, SelStatus::InvalidArgument);
    assert!(last_error().contains("rho"));

    unsafe { sel_params_free(p) };
}

#[test]
fn invalid_params_report_errors() {
    let mut p: *mut SelParams = ptr::null_mut();
    let st = unsafe { sel_params_new(0.8, 1.0, 0.0, 0.0, 1.0, 1.0, &mut p) };
    assert_eq!(st, SelStatus::InvalidArgument);
    assert!(last_error().contains("gamma"), "{}", last_error());
    assert!(p.is_null());

    let st = unsafe { sel_params_new(2.0, 1.0, 0.0, 0.0, 1.0, 1.0, ptr::null_mut()) };
    assert_eq!(st, SelStatus::NullPointer);
}

#[test]
fn simulation_advances_and_conserves_mass() {
    let cfg = CString::new("n_cells=64\nt_final=0.5\nn_windows=50\npaths=1\n").unwrap();
    let mut sim: *mut SelSimulation = ptr::null_mut();
    assert_eq!(unsafe { sel_sim_new_from_config(cfg.as_ptr(), &mut sim) }, SelStatus::Ok);

    let mut n = 0usize;
    assert_eq!(unsafe { sel_sim_n_cells(sim, &mut n) }, SelStatus::Ok);
    assert_eq!(n, 64);

    let mut mass0 = 0.0;
    assert_eq!(unsafe { sel_sim_mass(sim, &mut mass0) }, SelStatus::Ok);

    assert_eq!(unsafe { sel_sim_advance_windows(sim, 25) }, SelStatus::Ok);
    let mut t = 0.0;
    assert_eq!(unsafe { sel_sim_time(sim, &mut t) }, SelStatus::Ok);
    assert!((t - 0.25).abs() < 1e-12, "{t}");

    let mut mass1 = 0.0;
    assert_eq!(unsafe { sel_sim_mass(sim, &mut mass1) }, SelStatus::Ok);
    assert!((mass1 - mass0).abs() <= 1e-12);

    let mut rho = vec![0.0; 64];
    let mut m = vec![0.0; 64];
    assert_eq!(
        unsafe { sel_sim_copy_state(sim, rho.as_mut_ptr(), m.as_mut_ptr(), 64) },
        SelStatus::Ok
    );
    assert!(rho.iter().all(|&r| r > 0.0));
    // wrong buffer length is rejected
    assert_eq!(
        unsafe { sel_sim_copy_state(sim, rho.as_mut_ptr(), m.as_mut_ptr(), 32) },
        SelStatus::InvalidArgument
    );

    let mut w = 0.0;
    let mut z = 0.0;
    assert_eq!(unsafe { sel_sim_invariants(sim, &mut w, &mut z) }, SelStatus::Ok);
    assert!(w > 0.0 && z < 0.0);

    // advancing past the horizon is an error and leaves the state usable
    assert_eq!(unsafe { sel_sim_advance_windows(sim, 26) }, SelStatus::OutOfRange);
    assert_eq!(unsafe { sel_sim_advance_windows(sim, 25) }, SelStatus::Ok);

    unsafe { sel_sim_free(sim) };
}

#[test]
fn bad_config_reports_keys() {
    let cfg = CString::new("gamma=0.2\nwhat=4\n").unwrap();
    let mut sim: *mut SelSimulation = ptr::null_mut();
    let st = unsafe { sel_sim_new_from_config(cfg.as_ptr(), &mut sim) };
    assert_eq!(st, SelStatus::InvalidArgument);
    let msg = last_error();
    assert!(msg.contains("what"), "{msg}");
    assert!(sim.is_null());
}

#[test]
fn seed_derivation_matches_core() {
    assert_eq!(sel_derive_seed(7, 3), sel_core::ensemble::derive_seed(7, 3));
    assert_ne!(sel_derive_seed(7, 0), sel_derive_seed(7, 1));
}

#[test]
fn decay_fit_through_ffi() {
    let ts: Vec<f64> = (0..50).map(|k| 0.2 * k as f64).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| 2.0 * (-0.3 * t).exp()).collect();
    let (mut rate, mut pre, mut r2) = (0.0, 0.0, 0.0);
    let st = unsafe {
        sel_fit_decay(ts.as_ptr(), vs.as_ptr(), 50, 0.0, 10.0, &mut rate, &mut pre, &mut r2)
    };
    assert_eq!(st, SelStatus::Ok);
    assert!((rate - 0.3).abs() < 1e-10);
    assert!((pre - 2.0).abs() < 1e-10);
    assert!(r2 > 0.999999);

    // nonpositive value in the window errors
    let bad = [1.0, 0.0, 0.5];
    let st = unsafe {
        sel_fit_decay(ts.as_ptr(), bad.as_ptr(), 3, 0.0, 1.0, &mut rate, &mut pre, &mut r2)
    };
    assert_eq!(st, SelStatus::InvalidArgument);
}

#[test]
fn header_is_generated() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/sel.h");
    let text = std::fs::read_to_string(header).expect("cbindgen header exists");
    for symbol in [
        "sel_params_new",
        "sel_sim_new_from_config",
        "sel_sim_advance_windows",
        "sel_sim_copy_state",
        "sel_derive_seed",
        "sel_fit_decay",
        "sel_last_error_message",
        "SelStatus",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol}");
    }
}
