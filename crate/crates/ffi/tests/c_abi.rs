use std::ffi::{c_char, CString};
use std::ptr;

use stefan_limits_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { sl_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn params(delta: f64, sigma: f64) -> *mut SlParams {
    let mut p = ptr::null_mut();
    let s = unsafe { sl_params_new(1.0, 1.0, delta, sigma, 1.0, 1.0, 1.0, 4.0, 1.0, &mut p) };
    assert_eq!(s, SlStatus::Ok);
    p
}

#[test]
fn m_symbol_at_the_unit_point() {
    // λ = 0, z = 0, κ = 1, δ = σ = 0: ω± = 1, m = 1 + 2 = 3
    let p = params(0.0, 0.0);
    let (mut re, mut im) = (0.0, 0.0);
    let s = unsafe { sl_m_symbol(p, 0.0, 0.0, 0.0, 0.0, &mut re, &mut im) };
    assert_eq!(s, SlStatus::Ok);
    assert_eq!((re, im), (3.0, 0.0));
    unsafe { sl_params_free(p) };
}

#[test]
fn omega_is_the_principal_root() {
    let (mut re, mut im) = (0.0, 0.0);
    let s = unsafe { sl_omega(0.0, 0.0, 3.0, 0.0, 1.0, 1.0, &mut re, &mut im) };
    assert_eq!(s, SlStatus::Ok);
    assert_eq!((re, im), (2.0, 0.0));
    let s = unsafe { sl_omega(-5.0, 0.0, 0.0, 0.0, 1.0, 1.0, &mut re, &mut im) };
    assert_eq!(s, SlStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn triangle_ratio_bounds() {
    let mut r = 0.0;
    assert_eq!(unsafe { sl_triangle_ratio(1.0, 0.0, 1.0, 0.0, &mut r) }, SlStatus::Ok);
    assert_eq!(r, 1.0);
    assert_eq!(unsafe { sl_triangle_ratio(1.0, 0.0, -1.0, 0.0, &mut r) }, SlStatus::Ok);
    assert_eq!(r, 0.0);
    assert_eq!(unsafe { sl_triangle_ratio(0.0, 0.0, 0.0, 0.0, &mut r) }, SlStatus::InvalidArgument);
}

#[test]
fn invalid_parameters_are_rejected() {
    let mut p = ptr::null_mut();
    let s = unsafe { sl_params_new(-1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 4.0, 1.0, &mut p) };
    assert_eq!(s, SlStatus::InvalidArgument);
    assert!(p.is_null());
    assert!(last_error().contains("c_plus"));
}

#[test]
fn null_pointers_are_reported() {
    let s = unsafe { sl_omega(1.0, 0.0, 1.0, 0.0, 1.0, 1.0, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(s, SlStatus::NullPointer);
    unsafe {
        sl_params_free(ptr::null_mut());
        sl_config_free(ptr::null_mut());
        sl_solution_free(ptr::null_mut());
    }
}

#[test]
fn bad_config_json() {
    let json = CString::new(r#"{"model": {"N_x": "many"}}"#).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { sl_config_from_json(json.as_ptr(), &mut c) }, SlStatus::Config);
    assert!(c.is_null());
}

#[test]
fn solve_and_read_back() {
    let json = CString::new(r#"{"model": {"N_x": 8, "N_y": 48, "N_t": 8, "delta": 0.5, "sigma": 0.5}}"#).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { sl_config_from_json(json.as_ptr(), &mut c) }, SlStatus::Ok);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { sl_solve_full(c, &mut sol) }, SlStatus::Ok, "{}", last_error());
    let (mut nt, mut nx, mut ny) = (0, 0, 0);
    assert_eq!(unsafe { sl_solution_dims(sol, &mut nt, &mut nx, &mut ny) }, SlStatus::Ok);
    assert_eq!((nt, nx, ny), (9, 8, 49));
    let mut rho = vec![0.0; nt * nx];
    assert_eq!(unsafe { sl_solution_rho(sol, rho.as_mut_ptr(), rho.len()) }, SlStatus::Ok);
    assert!(rho.iter().all(|v| v.is_finite()) && rho.iter().any(|v| *v != 0.0));
    let mut v = vec![0.0; nt * nx * ny];
    assert_eq!(
        unsafe { sl_solution_v(sol, SlSide::Minus, v.as_mut_ptr(), v.len() - 1) },
        SlStatus::BufferTooSmall
    );
    assert_eq!(unsafe { sl_solution_v(sol, SlSide::Minus, v.as_mut_ptr(), v.len()) }, SlStatus::Ok);
    unsafe {
        sl_solution_free(sol);
        sl_config_free(c);
    }
}

#[test]
fn study_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let json = CString::new(
        r#"{"sector": {"n_lambda": 6, "n_z": 6, "n_arg": 3, "n_delta": 2, "n_sigma": 2, "floor": 0.99}}"#,
    )
    .unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { sl_config_from_json(json.as_ptr(), &mut c) }, SlStatus::Ok);
    let mut failed = false;
    let s = unsafe { sl_run_study(c, SlStudy::Sector, out.as_ptr(), &mut failed) };
    assert_eq!(s, SlStatus::Ok, "{}", last_error());
    assert!(failed, "floor 0.99 must trip the report");
    assert!(dir.path().join("sector.csv").exists());
    assert!(dir.path().join("sector_summary.json").exists());
    unsafe { sl_config_free(c) };
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/stefan_limits.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["sl_params_new", "sl_m_symbol", "sl_run_study", "sl_solve_full", "SL_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from the header");
    }
    if let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
