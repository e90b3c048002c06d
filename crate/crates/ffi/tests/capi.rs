use std::ffi::{c_char, CStr};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use opdilate_ffi::*;

fn instance(path: &str) -> Vec<u8> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances");
    std::fs::read(root.join(path)).unwrap()
}

fn load(bytes: &[u8]) -> (OpdStatus, *mut OpdInstance) {
    let mut inst = ptr::null_mut();
    let s = unsafe { opd_instance_from_json(bytes.as_ptr().cast::<c_char>(), bytes.len(), &mut inst) };
    (s, inst)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(opd_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn dilate_identity_channel_and_verify() {
    let (s, inst) = load(&instance("identity_channel.json"));
    assert_eq!(s, OpdStatus::Ok);
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { opd_dilate(inst, 0.0, 3, &mut res) }, OpdStatus::Ok);
    assert!(unsafe { opd_result_passed(res) });
    let mut ranks = [0usize; 2];
    assert_eq!(unsafe { opd_result_ranks(res, ranks.as_mut_ptr(), 2) }, 1);
    assert_eq!(ranks[0], 2);

    let json = unsafe { opd_result_to_json(res) };
    let text = unsafe { CStr::from_ptr(json) }.to_bytes().to_vec();
    assert_eq!(unsafe { opd_verify(inst, text.as_ptr().cast(), text.len()) }, OpdStatus::Ok);
    unsafe {
        opd_string_free(json);
        opd_result_free(res);
        opd_instance_free(inst);
    }
}

#[test]
fn transpose_map_is_not_positive() {
    let (_, inst) = load(&instance("transpose_map.json"));
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { opd_check(inst, 0, &mut res) }, OpdStatus::NotPositive);
    assert!(!res.is_null());
    assert!(!unsafe { opd_result_passed(res) });
    unsafe { opd_result_free(res) };

    let mut res = ptr::null_mut();
    assert_eq!(unsafe { opd_dilate(inst, 0.0, 0, &mut res) }, OpdStatus::NotPositive);
    assert!(res.is_null());
    assert!(last_error().contains("not completely positive"), "{}", last_error());
    unsafe { opd_instance_free(inst) };
}

#[test]
fn malformed_input_and_null_pointers() {
    let (s, inst) = load(b"{\"kind\":\"cpmap\"");
    assert_eq!(s, OpdStatus::Malformed);
    assert!(inst.is_null());
    assert!(!last_error().is_empty());

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { opd_instance_from_json(ptr::null(), 0, &mut out) }, OpdStatus::NullPointer);
    assert_eq!(unsafe { opd_check(ptr::null(), 0, &mut ptr::null_mut()) }, OpdStatus::NullPointer);
    assert!(!unsafe { opd_result_passed(ptr::null()) });
    assert_eq!(unsafe { opd_result_ranks(ptr::null(), ptr::null_mut(), 0) }, 0);
    unsafe {
        opd_instance_free(ptr::null_mut());
        opd_result_free(ptr::null_mut());
        opd_string_free(ptr::null_mut());
    }
}

#[test]
fn verify_rejects_result_of_another_instance() {
    let (_, trine) = load(&instance("trine_povm.json"));
    let (_, id) = load(&instance("identity_channel.json"));
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { opd_dilate(trine, 0.0, 0, &mut res) }, OpdStatus::Ok);
    let json = unsafe { opd_result_to_json(res) };
    let text = unsafe { CStr::from_ptr(json) }.to_bytes().to_vec();
    assert_eq!(unsafe { opd_verify(id, text.as_ptr().cast(), text.len()) }, OpdStatus::Malformed);
    assert!(last_error().contains("digest"));
    unsafe {
        opd_string_free(json);
        opd_result_free(res);
        opd_instance_free(trine);
        opd_instance_free(id);
    }
}

#[test]
fn psd_check_on_raw_matrix() {
    // [[1, 2], [2, 1]] has eigenvalues 3 and −1
    let m = [1.0, 0.0, 2.0, 0.0, 2.0, 0.0, 1.0, 0.0];
    let mut psd = true;
    let mut lo = 0.0;
    assert_eq!(unsafe { opd_psd_check(m.as_ptr(), 2, &mut psd, &mut lo) }, OpdStatus::Ok);
    assert!(!psd);
    assert!((lo + 1.0).abs() < 1e-12);

    let skew = [0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0];
    assert_eq!(unsafe { opd_psd_check(skew.as_ptr(), 2, &mut psd, ptr::null_mut()) }, OpdStatus::NotPositive);
    assert!(last_error().contains("Hermitian"));
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(opd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/opdilate.h")).unwrap();
    for name in [
        "opd_instance_from_json",
        "opd_instance_free",
        "opd_check",
        "opd_dilate",
        "opd_verify",
        "opd_result_passed",
        "opd_result_ranks",
        "opd_result_to_json",
        "opd_result_free",
        "opd_string_free",
        "opd_psd_check",
        "opd_last_error_message",
        "opd_version",
        "OPD_STATUS_RESIDUAL_EXCEEDED",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // integration tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libopdilate_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ranks [2]");
}
