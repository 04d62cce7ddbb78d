use std::ffi::{CStr, CString};
use std::ptr;

use nonloc_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(nonloc_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn plan(eps: f64, h: f64) -> *mut NonlocPlan {
    let mut p = ptr::null_mut();
    let s = unsafe { nonloc_plan_new_zero_order(0.5, eps, -1.0, 1.0, h, 4.0, &mut p) };
    assert_eq!(s, NonlocStatus::Ok, "{}", last_error());
    p
}

fn len(p: *const NonlocPlan) -> usize {
    let mut n = 0;
    assert_eq!(unsafe { nonloc_plan_len(p, &mut n) }, NonlocStatus::Ok);
    n
}

#[test]
fn constant_on_closure_matches_the_closed_form() {
    let p = plan(1.0, 0.05);
    let n = len(p);
    assert_eq!(n, 41);
    let u = vec![1.0; n];
    let mut out = vec![0.0; n];
    assert_eq!(
        unsafe { nonloc_plan_apply(p, u.as_ptr(), n, out.as_mut_ptr()) },
        NonlocStatus::Ok
    );
    // exterior mass seen from the centre, on the cell-centred quadrature
    let expected = -(std::f64::consts::PI - 2.0 * 1.025f64.atan());
    assert!(
        (out[20] - expected).abs() < 1e-6,
        "{} vs {expected}",
        out[20]
    );
    unsafe { nonloc_plan_free(p) };
}

#[test]
fn picard_and_direct_agree() {
    let p = plan(0.2, 0.05);
    let n = len(p);
    let f = vec![1.0; n];
    let (mut ud, mut up) = (vec![0.0; n], vec![0.0; n]);
    let mut iters = 0;
    unsafe {
        assert_eq!(
            nonloc_solve_direct(p, f.as_ptr(), n, ud.as_mut_ptr()),
            NonlocStatus::Ok
        );
        let s = nonloc_solve_picard(
            p,
            f.as_ptr(),
            n,
            1e-10,
            100_000,
            up.as_mut_ptr(),
            &mut iters,
        );
        assert_eq!(s, NonlocStatus::Ok, "{}", last_error());
        nonloc_plan_free(p);
    }
    assert!(iters > 0);
    let gap = ud
        .iter()
        .zip(&up)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-8, "{gap}");
    assert!(ud.iter().all(|v| *v > 0.0));
}

#[test]
fn nodes_and_nu0() {
    let p = plan(0.2, 0.05);
    let n = len(p);
    let mut x = vec![0.0; n];
    let (mut h, mut nu0) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            nonloc_plan_nodes(p, x.as_mut_ptr(), n, &mut h),
            NonlocStatus::Ok
        );
        assert_eq!(nonloc_plan_nu0(p, &mut nu0), NonlocStatus::Ok);
        nonloc_plan_free(p);
    }
    assert_eq!(h, 0.05);
    assert!((x[0] + 1.0).abs() < 1e-12 && (x[n - 1] - 1.0).abs() < 1e-12);
    assert!(nu0 > 0.0);
}

#[test]
fn errors_set_codes_and_messages() {
    let mut p = ptr::null_mut();
    let s = unsafe { nonloc_plan_new_zero_order(1.5, 0.2, -1.0, 1.0, 0.05, 4.0, &mut p) };
    assert_eq!(s, NonlocStatus::Config);
    assert!(p.is_null());
    assert!(last_error().contains("sigma"), "{}", last_error());

    assert_eq!(
        unsafe { nonloc_plan_len(ptr::null(), ptr::null_mut()) },
        NonlocStatus::NullPointer
    );
    assert!(last_error().contains("plan"));

    let p = plan(0.2, 0.05);
    let f = [1.0; 3];
    let mut u = [0.0; 3];
    assert_eq!(
        unsafe { nonloc_solve_direct(p, f.as_ptr(), 3, u.as_mut_ptr()) },
        NonlocStatus::InvalidArgument
    );
    assert!(last_error().contains("41"));
    let n = len(p);
    assert_eq!(last_error(), "");

    let f = vec![1.0; n];
    let mut u = vec![0.0; n];
    let s =
        unsafe { nonloc_solve_picard(p, f.as_ptr(), n, 1e-12, 3, u.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(s, NonlocStatus::NotConverged);
    unsafe { nonloc_plan_free(p) };
}

#[test]
fn toml_constructor() {
    let cfg = CString::new(
        "domain = [[0.0, 2.0]]\n[kernel]\nfamily = \"zero_order\"\nsigma = 0.25\nepsilon = 0.4\n[grid]\nh_target = 0.1\n",
    )
    .unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { nonloc_plan_from_toml(cfg.as_ptr(), &mut p) },
        NonlocStatus::Ok,
        "{}",
        last_error()
    );
    assert_eq!(len(p), 21);
    unsafe { nonloc_plan_free(p) };

    let bad = CString::new("domain = 3").unwrap();
    assert_eq!(
        unsafe { nonloc_plan_from_toml(bad.as_ptr(), &mut p) },
        NonlocStatus::Config
    );
    assert!(!last_error().is_empty());
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(nonloc_version()) }
        .to_str()
        .unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/nonloc.h");
    for name in [
        "nonloc_last_error_message",
        "nonloc_version",
        "nonloc_plan_new_zero_order",
        "nonloc_plan_from_toml",
        "nonloc_plan_free",
        "nonloc_plan_len",
        "nonloc_plan_nodes",
        "nonloc_plan_nu0",
        "nonloc_plan_apply",
        "nonloc_solve_direct",
        "nonloc_solve_picard",
    ] {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"nonloc.h\"\nint main(void) { return NONLOC_STATUS_OK; }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = match std::process::Command::new("cc")
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-I",
            include,
        ])
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("no C compiler available ({e}); header syntax not checked");
            return;
        }
    };
    assert!(status.success());
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("nonloc-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
