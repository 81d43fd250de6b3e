use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use cbf_transit_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cbf_last_error_message()) }.to_string_lossy().into_owned()
}

fn load(name: &str) -> *mut CbfScenario {
    let name = CString::new(name).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cbf_scenario_load(name.as_ptr(), &mut s) }, CbfStatus::Ok, "{}", last_error());
    assert!(!s.is_null());
    s
}

#[test]
fn qp_solve_projects_onto_a_single_row() {
    let a = [3.0, 4.0];
    let b = [10.0];
    let mut u = [0.0; 2];
    let status = unsafe { cbf_qp_solve(2, 10.0, a.as_ptr(), b.as_ptr(), 1, u.as_mut_ptr()) };
    assert_eq!(status, CbfStatus::Ok);
    assert!((u[0] - 1.2).abs() < 1e-12 && (u[1] - 1.6).abs() < 1e-12);
}

#[test]
fn qp_solve_reports_infeasibility() {
    let a = [1.0, 0.0, -1.0, 0.0];
    let b = [1.0, 1.0];
    let mut u = [7.0; 2];
    let status = unsafe { cbf_qp_solve(2, 10.0, a.as_ptr(), b.as_ptr(), 2, u.as_mut_ptr()) };
    assert_eq!(status, CbfStatus::Infeasible);
    assert!(last_error().contains("infeasible"));
    assert_eq!(u, [7.0; 2]);
}

#[test]
fn softmin_matches_closed_form() {
    let v = [0.0, 0.0];
    let mut out = 0.0;
    assert_eq!(unsafe { cbf_softmin(v.as_ptr(), 2, &mut out) }, CbfStatus::Ok);
    assert!((out + 2f64.ln()).abs() < 1e-15);
    assert_ne!(unsafe { cbf_softmin(v.as_ptr(), 0, &mut out) }, CbfStatus::Ok);
}

#[test]
fn null_arguments_are_rejected() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cbf_scenario_load(ptr::null(), &mut s) }, CbfStatus::NullPointer);
    assert!(last_error().contains("path"));
    let mut log = ptr::null_mut();
    assert_eq!(unsafe { cbf_run(ptr::null(), CbfMode::Smooth, &mut log) }, CbfStatus::NullPointer);
    assert_eq!(unsafe { cbf_log_len(ptr::null()) }, 0);
    unsafe {
        cbf_log_free(ptr::null_mut());
        cbf_scenario_free(ptr::null_mut());
    }
}

#[test]
fn parse_errors_carry_a_message() {
    let json = CString::new("{\"schema\": 3}").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cbf_scenario_from_json(json.as_ptr(), &mut s) }, CbfStatus::Parse);
    assert!(s.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn run_and_read_back_a_log() {
    let s = load("motivating_example");
    let mut log = ptr::null_mut();
    assert_eq!(unsafe { cbf_run(s, CbfMode::Smooth, &mut log) }, CbfStatus::Ok);
    let mut term = CbfTermination::TimedOut;
    assert_eq!(unsafe { cbf_log_termination(log, &mut term) }, CbfStatus::Ok);
    assert_eq!(term, CbfTermination::Completed);

    let n = unsafe { cbf_log_len(log) };
    assert!(n > 100);
    let mut dt = 0.0;
    let mut t = 0.0;
    unsafe {
        assert_eq!(cbf_scenario_dt(s, &mut dt), CbfStatus::Ok);
        assert_eq!(cbf_log_time(log, n - 1, &mut t), CbfStatus::Ok);
    }
    assert!((t - (n - 1) as f64 * dt).abs() < 1e-9);
    assert_eq!(unsafe { cbf_log_time(log, n, &mut t) }, CbfStatus::OutOfRange);

    let mut written = 0;
    let status = unsafe { cbf_log_copy(log, 0, CbfField::State, ptr::null_mut(), 0, &mut written) };
    assert_eq!(status, CbfStatus::BufferTooSmall);
    assert_eq!(written, 2);
    let mut x = [0.0; 2];
    let status = unsafe { cbf_log_copy(log, 0, CbfField::State, x.as_mut_ptr(), 2, &mut written) };
    assert_eq!(status, CbfStatus::Ok);
    assert_eq!(x, [-1.5, 0.0]);

    let mut alpha = [0.0; 2];
    unsafe { cbf_log_copy(log, n - 1, CbfField::Alpha, alpha.as_mut_ptr(), 2, &mut written) };
    assert_eq!(alpha, [0.0, 1.0]);

    let mut times = [0.0; 4];
    let status = unsafe { cbf_log_arrival_times(log, times.as_mut_ptr(), 4, &mut written) };
    assert_eq!(status, CbfStatus::Ok);
    assert_eq!(written, 2);
    assert!(times[0] < times[1]);

    let mut jump = 0.0;
    assert_eq!(unsafe { cbf_log_max_jump(log, &mut jump) }, CbfStatus::Ok);
    assert!(jump > 0.0 && jump < 0.1);

    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { cbf_log_write_outputs(log, s, out.as_ptr()) }, CbfStatus::Ok);
    assert!(dir.path().join("out/trajectory.csv").exists());

    unsafe {
        cbf_log_free(log);
        cbf_scenario_free(s);
    }
}

#[test]
fn invalid_timing_leaves_the_scenario_unchanged() {
    let s = load("fcbf_line");
    let mut dt = 0.0;
    unsafe {
        assert_eq!(cbf_scenario_set_timing(s, f64::NAN, 1.0), CbfStatus::Ok);
        assert_eq!(cbf_scenario_set_timing(s, 5.0, 1.0), CbfStatus::Validation);
        cbf_scenario_dt(s, &mut dt);
    }
    assert_eq!(dt, 1e-4);
    unsafe {
        assert_eq!(cbf_scenario_set_timing(s, 1e-3, 0.5), CbfStatus::Ok);
        cbf_scenario_dt(s, &mut dt);
        cbf_scenario_free(s);
    }
    assert_eq!(dt, 1e-3);
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(cbf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/cbf_transit.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["cbf_qp_solve", "cbf_run", "cbf_log_copy", "CBF_STATUS_INFEASIBLE", "typedef struct CbfLog CbfLog"] {
        assert!(text.contains(name), "{name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ CbfScenario *s = 0; return cbf_scenario_load(\"x\", &s) == CBF_STATUS_OK; }}\n",
            header.display()
        ),
    )
    .unwrap();
    match Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler available; header syntax not checked"),
    }
}
