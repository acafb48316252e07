use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use hyperweyl_ffi::*;

fn last_error() -> String {
    let p = hw_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn distance_along_an_axis() {
    let t: f64 = 1.3;
    let a = [1.0, 0.0, 0.0, 0.0];
    let b = [t.cosh(), t.sinh(), 0.0, 0.0];
    let mut d = f64::NAN;
    assert_eq!(unsafe { hw_distance(a.as_ptr(), b.as_ptr(), &mut d) }, HwStatus::Ok);
    assert!((d - t).abs() < 1e-12);
}

#[test]
fn off_hyperboloid_is_a_domain_error() {
    let a = [2.0, 0.0, 0.0, 0.0];
    let b = [1.0, 0.0, 0.0, 0.0];
    let mut d = 0.0;
    assert_eq!(unsafe { hw_distance(a.as_ptr(), b.as_ptr(), &mut d) }, HwStatus::Domain);
    assert!(last_error().contains("hyperboloid"));
}

#[test]
fn null_pointers_are_reported() {
    let a = [1.0, 0.0, 0.0, 0.0];
    assert_eq!(unsafe { hw_distance(a.as_ptr(), a.as_ptr(), ptr::null_mut()) }, HwStatus::NullPointer);
    assert!(last_error().contains("result"));
    unsafe {
        hw_profile_free(ptr::null_mut());
        hw_hull_free(ptr::null_mut());
    }
}

#[test]
fn visual_density_vanishes_for_coincident_base_points() {
    assert_eq!(hw_visual_log_density(0.7, 0.0), 0.0);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(hw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn sphere_profile_revolves_to_a_sphere() {
    unsafe {
        let mut profile = ptr::null_mut();
        assert_eq!(hw_profile_sphere(1.0, 201, &mut profile), HwStatus::Ok);
        let mut surface = ptr::null_mut();
        assert_eq!(hw_revolve(profile, &mut surface), HwStatus::Ok, "{}", last_error());
        let (mut sup, mut l2) = (f64::NAN, f64::NAN);
        assert_eq!(hw_revolution_round_trip(surface, profile, &mut sup, &mut l2), HwStatus::Ok);
        assert!(sup < 1e-6 && l2 <= sup);
        let mut class = HwSurfaceClass::Generic;
        let mut radius = 0.0;
        assert_eq!(hw_revolution_classify(surface, 1e-5, &mut class, &mut radius), HwStatus::Ok);
        assert_eq!(class, HwSurfaceClass::Sphere);
        assert!((radius - 1.0).abs() < 1e-4);
        hw_revolution_free(surface);
        hw_profile_free(profile);
    }
}

#[test]
fn sampled_profile_rejects_mismatched_input() {
    let f = [0.0, 0.5];
    let mut h = ptr::null_mut();
    let s = unsafe { hw_profile_new(f.as_ptr(), f.as_ptr(), 2, -1.0, &mut h) };
    assert_eq!(s, HwStatus::InvalidArgument);
    assert!(h.is_null());
}

#[test]
fn missing_profile_file_is_io() {
    let path = CString::new("/nonexistent/profile.csv").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { hw_profile_read_csv(path.as_ptr(), &mut h) }, HwStatus::Io);
    assert!(last_error().contains("/nonexistent/profile.csv"));
}

#[test]
fn registered_field_curvature() {
    unsafe {
        let name = CString::new("shift").unwrap();
        let mut field = ptr::null_mut();
        assert_eq!(hw_field_registered(name.as_ptr(), 33, &mut field), HwStatus::Ok, "{}", last_error());
        let (mut nx, mut ny) = (0, 0);
        assert_eq!(hw_field_dims(field, &mut nx, &mut ny), HwStatus::Ok);
        let mut k = vec![0.0; nx * ny];
        let mut valid = vec![0u8; nx * ny];
        assert_eq!(hw_field_curvature(field, k.as_mut_ptr(), valid.as_mut_ptr(), k.len()), HwStatus::Ok);
        let expected = (-2.0f64).exp();
        let mut seen = 0;
        for (k, v) in k.iter().zip(&valid) {
            if *v == 1 {
                seen += 1;
                assert!((k - expected).abs() < 1e-9, "{k}");
            } else {
                assert!(k.is_nan());
            }
        }
        assert!(seen > 0);
        assert_eq!(hw_field_curvature(field, k.as_mut_ptr(), valid.as_mut_ptr(), 3), HwStatus::InvalidArgument);
        hw_field_free(field);

        let bogus = CString::new("no-such-field").unwrap();
        let mut h = ptr::null_mut();
        assert_ne!(hw_field_registered(bogus.as_ptr(), 33, &mut h), HwStatus::Ok);
    }
}

#[test]
fn cutoff_is_certified_and_evaluates() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(hw_cutoff_new(0.2, &mut c), HwStatus::Ok, "{}", last_error());
        let mut margin = f64::NAN;
        assert_eq!(hw_cutoff_min_margin(c, &mut margin), HwStatus::Ok);
        assert!(margin >= 0.0);
        let mut v = [f64::NAN; 3];
        assert_eq!(hw_cutoff_eval(c, 0, -1.0, v.as_mut_ptr()), HwStatus::Ok);
        assert_eq!(v, [-1.0, 1.0, 0.0]);
        assert_eq!(hw_cutoff_eval(c, 0, 5.0, v.as_mut_ptr()), HwStatus::Ok);
        assert_eq!(v, [1.0, 0.0, 0.0]);
        hw_cutoff_free(c);
    }
}

#[test]
fn tetrahedron_hull_has_dihedrals_pi_over_three() {
    let s = 1.0 / 3f64.sqrt();
    let xyz = [s, s, s, s, -s, -s, -s, s, -s, -s, -s, s];
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(hw_hull_new(xyz.as_ptr(), 4, &mut h), HwStatus::Ok, "{}", last_error());
        let (mut faces, mut edges) = (0, 0);
        assert_eq!(hw_hull_counts(h, &mut faces, &mut edges), HwStatus::Ok);
        assert_eq!((faces, edges), (4, 6));
        for e in 0..edges {
            let mut a = 0.0;
            assert_eq!(hw_hull_dihedral(h, e, &mut a), HwStatus::Ok);
            assert!((a - std::f64::consts::FRAC_PI_3).abs() < 1e-10, "{a}");
        }
        let mut a = 0.0;
        assert_eq!(hw_hull_dihedral(h, edges, &mut a), HwStatus::InvalidArgument);
        hw_hull_free(h);
    }
}

#[test]
fn pipeline_runs_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = CString::new("cutoff").unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut passed = 0u8;
    let s = unsafe { hw_run_pipeline(cmd.as_ptr(), ptr::null(), out.as_ptr(), true, &mut passed) };
    assert_eq!(s, HwStatus::Ok, "{}", last_error());
    assert_eq!(passed, 1);
    assert!(dir.path().join("cutoff_report.json").exists());

    let bad = CString::new("frobnicate").unwrap();
    let s = unsafe { hw_run_pipeline(bad.as_ptr(), ptr::null(), out.as_ptr(), true, &mut passed) };
    assert_eq!(s, HwStatus::InvalidArgument);
    assert!(last_error().contains("frobnicate"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hyperweyl.h")
}

fn c_compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().filter(|o| o.status.success()).map(|_| cc)
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "hyperweyl.h"

int main(void) {
    double a[4] = {1.0, 0.0, 0.0, 0.0};
    double b[4] = {cosh(0.5), sinh(0.5), 0.0, 0.0};
    double d = 0.0;
    if (hw_distance(a, b, &d) != HW_STATUS_OK || fabs(d - 0.5) > 1e-12) return 1;
    HwProfile *p = NULL;
    if (hw_profile_sphere(1.0, 101, &p) != HW_STATUS_OK) return 2;
    HwRevolution *s = NULL;
    if (hw_revolve(p, &s) != HW_STATUS_OK) return 3;
    HwSurfaceClass c;
    double r = 0.0;
    if (hw_revolution_classify(s, 1e-4, &c, &r) != HW_STATUS_OK || c != HW_SURFACE_CLASS_SPHERE) return 4;
    hw_revolution_free(s);
    hw_profile_free(p);
    if (hw_distance(a, b, NULL) != HW_STATUS_NULL_POINTER || hw_last_error() == NULL) return 5;
    printf("%s\n", hw_version());
    return 0;
}
"#;

#[test]
fn header_compiles_as_c_and_cxx() {
    let Some(cc) = c_compiler() else {
        eprintln!("no C compiler found; header check skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = header().parent().unwrap().to_path_buf();
    for lang in ["c", "c++"] {
        let st = Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I"])
            .arg(&include)
            .arg(&src)
            .status()
            .unwrap();
        assert!(st.success(), "header does not compile as {lang}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let Some(cc) = c_compiler() else {
        eprintln!("no C compiler found; link check skipped");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libhyperweyl_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; link check skipped", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    let bin = dir.path().join("use");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let st = Command::new(&cc)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(st.success(), "link failed");
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "C program exited with {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
