use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use ppinfo_ffi::*;

const POISSON: &str = r#"{
  "base_space": { "dimension": 1, "bounds": [[0, 10]] },
  "model": { "type": "poisson", "intensity": 0.5 },
  "reference": { "c_value": 2 },
  "grid": { "cells": 100 }
}"#;

const POISSON_04: &str = r#"{
  "base_space": { "dimension": 1, "bounds": [[0, 10]] },
  "model": { "type": "poisson", "intensity": 0.4 },
  "grid": { "cells": 100 }
}"#;

const BERNOULLI_C20: &str = r#"{
  "base_space": { "dimension": 1, "bounds": [[0, 10]] },
  "model": { "type": "multi_bernoulli", "components": [{ "existence": 0.5, "spatial": "uniform" }] },
  "reference": { "c_value": 20 },
  "grid": { "cells": 100 }
}"#;

struct Handle(*mut PpModel);

impl Handle {
    fn new(json: &str) -> Handle {
        let text = CString::new(json).unwrap();
        let mut h = ptr::null_mut();
        let status = unsafe { pp_model_from_json(text.as_ptr(), &mut h) };
        assert_eq!(status, PpStatus::Ok, "{}", last_error());
        Handle(h)
    }
}

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { pp_model_free(self.0) }
    }
}

fn last_error() -> String {
    let p = pp_last_error();
    if p.is_null() {
        String::new()
    } else {
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }
}

#[test]
fn janossy_values_and_units() {
    let m = Handle::new(POISSON);
    let (mut v, mut num, mut den) = (0.0, 0i64, 0i64);
    let pts = [1.0, 2.0];
    assert_eq!(unsafe { pp_janossy(m.0, pts.as_ptr(), 2, &mut v, &mut num, &mut den) }, PpStatus::Ok);
    assert!((v - (-5.0f64).exp() * 0.25 / 2.0).abs() < 1e-16);
    assert_eq!((num, den), (-2, 1));
    assert_eq!(unsafe { pp_janossy(m.0, ptr::null(), 0, &mut v, &mut num, &mut den) }, PpStatus::Ok);
    assert!((v - (-5.0f64).exp()).abs() < 1e-16);
    assert_eq!((num, den), (0, 1));
}

#[test]
fn pdf_and_pmf() {
    let m = Handle::new(POISSON);
    let mut v = 0.0;
    let pts = [1.0, 2.0];
    assert_eq!(unsafe { pp_pdf(m.0, pts.as_ptr(), 2, &mut v) }, PpStatus::Ok);
    assert!((v - (-5.0f64).exp() / 2.0).abs() < 1e-16);
    assert_eq!(unsafe { pp_cardinality_pmf(m.0, 2, &mut v) }, PpStatus::Ok);
    assert!((v - 0.084224337488569).abs() < 1e-12);
    let mut d = 0usize;
    assert_eq!(unsafe { pp_model_dimension(m.0, &mut d) }, PpStatus::Ok);
    assert_eq!(d, 1);
}

#[test]
fn entropy_and_kl() {
    let m1 = Handle::new(POISSON);
    let m0 = Handle::new(POISSON_04);
    let mut v = 0.0;
    assert_eq!(unsafe { pp_differential_entropy(m1.0, &mut v) }, PpStatus::Ok);
    assert!((v - 10.2515848).abs() < 1e-6);
    assert_eq!(unsafe { pp_kl_divergence(m1.0, m0.0, &mut v) }, PpStatus::Ok);
    assert!((v - (4.0 - 5.0 + 5.0 * 1.25f64.ln())).abs() < 1e-6);
    // no reference configured
    assert_eq!(unsafe { pp_differential_entropy(m0.0, &mut v) }, PpStatus::Config);
    assert!(last_error().contains("reference"));
}

#[test]
fn map_estimate_and_buffer_contract() {
    let m = Handle::new(BERNOULLI_C20);
    let (mut n, mut score) = (0usize, 0.0);
    let mut cells = [usize::MAX; 4];
    assert_eq!(
        unsafe { pp_map_estimate(m.0, cells.as_mut_ptr(), cells.len(), &mut n, &mut score) },
        PpStatus::Ok
    );
    assert_eq!(n, 1);
    assert_eq!(cells[0], 0);
    assert!((score - 1.0).abs() < 1e-12);
    assert_eq!(
        unsafe { pp_map_estimate(m.0, ptr::null_mut(), 0, &mut n, &mut score) },
        PpStatus::BufferTooSmall
    );
    assert_eq!(n, 1);
}

#[test]
fn run_command_returns_cli_json() {
    let cmd = CString::new("kl").unwrap();
    let cfg = CString::new(
        POISSON.replace("\"grid\"", "\"kl\": {\"reference_model\": {\"type\": \"poisson\", \"intensity\": 0.4}}, \"grid\""),
    )
    .unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { pp_run_command(cmd.as_ptr(), cfg.as_ptr(), 0, 0, &mut out) }, PpStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { pp_string_free(out) };
    let direct = ppinfo::cli::run(ppinfo::cli::Command::Kl, cfg.to_str().unwrap(), None).unwrap();
    assert_eq!(text, direct);

    let sample = CString::new("sample").unwrap();
    let mut a: *mut c_char = ptr::null_mut();
    let mut b: *mut c_char = ptr::null_mut();
    unsafe {
        assert_eq!(pp_run_command(sample.as_ptr(), cfg.as_ptr(), 42, 1, &mut a), PpStatus::Ok);
        assert_eq!(pp_run_command(sample.as_ptr(), cfg.as_ptr(), 42, 1, &mut b), PpStatus::Ok);
        assert_eq!(CStr::from_ptr(a), CStr::from_ptr(b));
        pp_string_free(a);
        pp_string_free(b);
    }
}

#[test]
fn errors_are_reported_with_codes() {
    let mut h = ptr::null_mut();
    let bad = CString::new(POISSON.replace("\"c_value\": 2", "\"c_value\": -1")).unwrap();
    assert_eq!(unsafe { pp_model_from_json(bad.as_ptr(), &mut h) }, PpStatus::Config);
    assert!(h.is_null());
    assert!(last_error().contains("reference.c_value"));

    assert_eq!(unsafe { pp_model_from_json(ptr::null(), &mut h) }, PpStatus::NullPointer);

    let m = Handle::new(POISSON);
    let (mut v, mut num, mut den) = (0.0, 0i64, 0i64);
    let outside = [11.0];
    assert_eq!(
        unsafe { pp_janossy(m.0, outside.as_ptr(), 1, &mut v, &mut num, &mut den) },
        PpStatus::Numerical
    );
    assert!(!last_error().is_empty());
    let mut d = 0usize;
    assert_eq!(unsafe { pp_model_dimension(m.0, &mut d) }, PpStatus::Ok);
    assert!(pp_last_error().is_null());

    let cmd = CString::new("nope").unwrap();
    let cfg = CString::new(POISSON).unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(
        unsafe { pp_run_command(cmd.as_ptr(), cfg.as_ptr(), 0, 0, &mut out) },
        PpStatus::UnknownCommand
    );
    assert!(out.is_null());
    unsafe { pp_model_free(ptr::null_mut()) };
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/ppinfo.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "pp_model_from_json",
        "pp_model_free",
        "pp_janossy",
        "pp_pdf",
        "pp_cardinality_pmf",
        "pp_differential_entropy",
        "pp_kl_divergence",
        "pp_map_estimate",
        "pp_run_command",
        "pp_string_free",
        "pp_last_error",
        "PP_STATUS_OK",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let probe = tempfile_path("probe.c");
    std::fs::write(
        &probe,
        "#include \"ppinfo.h\"\nint main(void) { PpModel *m = 0; return pp_model_from_json(\"{}\", &m) == PP_STATUS_OK; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&probe)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
}

fn tempfile_path(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("ppinfo-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}
