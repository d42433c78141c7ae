use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use wp_curvature_ffi::*;

fn last_error() -> String {
    let p = wpc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn coarse_config() -> *mut WpcConfig {
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(wpc_config_new(&mut cfg), WpcStatus::Ok);
        assert_eq!(wpc_config_set_mesh_level(cfg, 1), WpcStatus::Ok);
        let stage = CString::new("spectrum").unwrap();
        assert_eq!(wpc_config_set_stage(cfg, stage.as_ptr()), WpcStatus::Ok);
    }
    cfg
}

#[test]
fn run_exposes_spectrum_and_report() {
    unsafe {
        let cfg = coarse_config();
        let mut run = ptr::null_mut();
        assert_eq!(wpc_run(cfg, &mut run), WpcStatus::Ok);
        assert!(wpc_last_error().is_null());

        let mut len = 0usize;
        assert_eq!(wpc_run_spectrum(run, ptr::null_mut(), 0, &mut len), WpcStatus::Ok);
        assert_eq!(len, 15);
        let mut small = [0.0; 4];
        assert_eq!(wpc_run_spectrum(run, small.as_mut_ptr(), 4, &mut len), WpcStatus::BufferTooSmall);
        assert!(last_error().contains("15"));
        let mut values = vec![0.0; len];
        assert_eq!(wpc_run_spectrum(run, values.as_mut_ptr(), len, &mut len), WpcStatus::Ok);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        assert!(values[14] <= 1e-8 * values[0].abs());

        let mut passed = -1;
        assert_eq!(wpc_run_all_passed(run, &mut passed), WpcStatus::Ok);
        assert_eq!(passed, 1);

        let mut json = ptr::null_mut();
        assert_eq!(wpc_run_report_json(run, &mut json), WpcStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        wpc_string_free(json);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["entries"].as_array().unwrap().len(), 10);

        wpc_run_free(run);
        wpc_config_free(cfg);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        assert_eq!(wpc_config_new(ptr::null_mut()), WpcStatus::NullPointer);
        assert!(last_error().contains("out"));

        let mut cfg = ptr::null_mut();
        let bad = CString::new("genus = 3").unwrap();
        assert_eq!(wpc_config_from_toml(bad.as_ptr(), &mut cfg), WpcStatus::Config);
        let unknown = CString::new("nope = 1").unwrap();
        assert_eq!(wpc_config_from_toml(unknown.as_ptr(), &mut cfg), WpcStatus::Config);
        assert!(cfg.is_null());

        let good = CString::new("mesh_level = 1\nword_length = 4\nstage = \"spectrum\"").unwrap();
        assert_eq!(wpc_config_from_toml(good.as_ptr(), &mut cfg), WpcStatus::Ok);
        let stage = CString::new("elsewhere").unwrap();
        assert_eq!(wpc_config_set_stage(cfg, stage.as_ptr()), WpcStatus::Config);
        let mut run = ptr::null_mut();
        assert_eq!(wpc_run(cfg, &mut run), WpcStatus::Numerical);
        assert!(last_error().contains("qdiff"));
        assert!(run.is_null());
        assert_eq!(wpc_config_set_tau_rel(cfg, -1.0), WpcStatus::Ok);
        assert_eq!(wpc_run(cfg, &mut run), WpcStatus::Config);
        wpc_config_free(cfg);

        let cfg = coarse_config();
        let pairings = CString::new("pairings").unwrap();
        assert_eq!(wpc_config_set_stage(cfg, pairings.as_ptr()), WpcStatus::Ok);
        assert_eq!(wpc_run(cfg, &mut run), WpcStatus::Ok);
        let mut len = 0;
        assert_eq!(wpc_run_spectrum(run, ptr::null_mut(), 0, &mut len), WpcStatus::NotAvailable);
        wpc_run_free(run);
        wpc_config_free(cfg);

        wpc_run_free(ptr::null_mut());
        wpc_config_free(ptr::null_mut());
        wpc_string_free(ptr::null_mut());
    }
}

#[test]
fn surrogate_suite_through_the_interface() {
    let mut passed = 0;
    unsafe {
        assert_eq!(wpc_surrogate_suite(5, 2, 60, 1e-8, &mut passed), WpcStatus::Ok);
        assert_eq!(passed, 1);
        assert_eq!(wpc_surrogate_suite(0, 2, 60, 1e-8, &mut passed), WpcStatus::InvalidArgument);
        assert_eq!(wpc_surrogate_suite(1, 2, 60, f64::NAN, &mut passed), WpcStatus::InvalidArgument);
    }
    let version = unsafe { CStr::from_ptr(wpc_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(manifest.join("include/wp_curvature.h")).unwrap();
    for symbol in ["wpc_run(", "wpc_run_spectrum(", "wpc_last_error(", "typedef struct WpcRun WpcRun;"] {
        assert!(header.contains(symbol), "{symbol}");
    }
    // tests/ lives in target/<profile>/deps; the libraries sit one level up.
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    assert!(lib_dir.join("libwp_curvature_ffi.a").exists(), "static library missing in {}", lib_dir.display());
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(lib_dir.join("libwp_curvature_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("15 "));
}
