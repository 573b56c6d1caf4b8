use std::ffi::{CStr, CString};
use std::ptr;

use hetsched_ffi::*;

fn last_error() -> String {
    let p = hs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn poly(alpha: f64) -> *mut HsPower {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { hs_power_poly(alpha, &mut p) }, HsStatus::Ok);
    p
}

fn instance(mode: HsMode) -> *mut HsInstance {
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { hs_instance_new(mode, &mut inst) }, HsStatus::Ok);
    inst
}

#[test]
fn single_job_closed_form() {
    unsafe {
        let p = poly(2.0);
        let inst = instance(HsMode::Weighted);
        assert_eq!(hs_instance_add_machine(inst, p), HsStatus::Ok);
        hs_power_free(p);
        assert_eq!(hs_instance_add_job(inst, 0, 0.0, 1.0, 1.0), HsStatus::Ok);
        let mut m = HsMetrics::default();
        assert_eq!(hs_simulate(inst, 1.0, &mut m), HsStatus::Ok);
        assert!((m.fractional_weighted_flow - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.energy - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.objective - 4.0 / 3.0).abs() < 1e-12);
        assert!(hs_last_error().is_null());
        hs_instance_free(inst);
    }
}

#[test]
fn unweighted_two_jobs() {
    unsafe {
        let p = poly(2.0);
        let inst = instance(HsMode::Unweighted);
        hs_instance_add_machine(inst, p);
        hs_power_free(p);
        hs_instance_add_job(inst, 0, 0.0, 1.0, 1.0);
        hs_instance_add_job(inst, 1, 0.0, 1.0, 1.0);
        let mut m = HsMetrics::default();
        assert_eq!(hs_simulate(inst, 1.0, &mut m), HsStatus::Ok);
        assert!((m.objective - 2.0 * (1.0 + 2f64.sqrt())).abs() < 1e-8);
        assert_eq!(hs_instance_add_job(inst, 2, 0.0, 1.0, 2.0), HsStatus::InvalidArgument);
        hs_instance_free(inst);
    }
}

#[test]
fn power_evaluation() {
    unsafe {
        let mut table = ptr::null_mut();
        let pairs = [0.0, 0.0, 1.0, 1.0, 2.0, 5.0];
        assert_eq!(hs_power_table(pairs.as_ptr(), 3, &mut table), HsStatus::Ok);
        let mut y = 0.0;
        assert_eq!(hs_power_eval(table, 1.5, &mut y), HsStatus::Ok);
        assert_eq!(y, 3.0);
        let mut s = 0.0;
        assert_eq!(hs_power_speed(table, 3.0, &mut s), HsStatus::Ok);
        assert_eq!(s, 1.5);
        assert_eq!(hs_power_eval(table, -1.0, &mut y), HsStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        hs_power_free(table);

        let mut affine = ptr::null_mut();
        let coeffs = [0.0, 1.0, 1.0];
        assert_eq!(hs_power_affine(coeffs.as_ptr(), 3, &mut affine), HsStatus::Ok);
        assert_eq!(hs_power_eval(affine, 2.0, &mut y), HsStatus::Ok);
        assert_eq!(y, 6.0);
        hs_power_free(affine);

        let mut bad = ptr::null_mut();
        assert_eq!(hs_power_poly(1.0, &mut bad), HsStatus::InvalidArgument);
        assert!(bad.is_null());
        assert!(last_error().contains("power"));
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        let mut y = 0.0;
        assert_eq!(hs_power_eval(ptr::null(), 1.0, &mut y), HsStatus::NullPointer);
        assert_eq!(hs_power_poly(2.0, ptr::null_mut()), HsStatus::NullPointer);
        assert_eq!(hs_simulate(ptr::null(), 1.0, ptr::null_mut()), HsStatus::NullPointer);
        assert_eq!(hs_instance_from_json(ptr::null(), ptr::null_mut()), HsStatus::NullPointer);
        assert_eq!(hs_power_table(ptr::null(), 2, &mut ptr::null_mut()), HsStatus::NullPointer);
        hs_instance_free(ptr::null_mut());
        hs_power_free(ptr::null_mut());
        hs_string_free(ptr::null_mut());
    }
}

#[test]
fn json_round_trip_and_parse_errors() {
    let json = CString::new(
        r#"{"machines":[{"kind":"poly","alpha":2.0},{"kind":"table","points":[[0,0],[1,1],[2,5]]}],
            "jobs":[{"id":3,"release":0.5,"size":1.0,"weight":2.0},{"id":1,"release":0.0,"size":2.0,"weight":1.0}],
            "mode":"weighted"}"#,
    )
    .unwrap();
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(hs_instance_from_json(json.as_ptr(), &mut inst), HsStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(hs_instance_to_json(inst, &mut out), HsStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        hs_string_free(out);
        let again = CString::new(text.clone()).unwrap();
        let mut copy = ptr::null_mut();
        assert_eq!(hs_instance_from_json(again.as_ptr(), &mut copy), HsStatus::Ok);
        let (mut a, mut b) = (HsMetrics::default(), HsMetrics::default());
        assert_eq!(hs_simulate(inst, 1.5, &mut a), HsStatus::Ok);
        assert_eq!(hs_simulate(copy, 1.5, &mut b), HsStatus::Ok);
        assert_eq!(a, b);
        assert!(a.objective > 0.0);
        hs_instance_free(inst);
        hs_instance_free(copy);

        let broken = CString::new("{\"machines\": [}").unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(hs_instance_from_json(broken.as_ptr(), &mut none), HsStatus::Parse);
        assert!(none.is_null());
        assert!(last_error().starts_with("1:"));
    }
}

#[test]
fn invalid_instances_fail_at_use() {
    unsafe {
        let inst = instance(HsMode::Weighted);
        hs_instance_add_job(inst, 0, 0.0, 1.0, 1.0);
        let mut m = HsMetrics::default();
        assert_eq!(hs_simulate(inst, 1.0, &mut m), HsStatus::InvalidArgument);
        let p = poly(3.0);
        hs_instance_add_machine(inst, p);
        hs_power_free(p);
        assert_eq!(hs_instance_add_job(inst, 0, 1.0, 1.0, 1.0), HsStatus::InvalidArgument);
        assert_eq!(hs_instance_add_job(inst, 1, 0.0, -1.0, 1.0), HsStatus::InvalidArgument);
        assert_eq!(hs_simulate(inst, 0.5, &mut m), HsStatus::InvalidArgument);
        assert_eq!(hs_simulate(inst, 1.0, &mut m), HsStatus::Ok);
        hs_instance_free(inst);
    }
}

#[test]
fn verify_single_arrival() {
    unsafe {
        let inst = instance(HsMode::Weighted);
        for _ in 0..2 {
            let p = poly(2.0);
            hs_instance_add_machine(inst, p);
            hs_power_free(p);
        }
        hs_instance_add_job(inst, 0, 0.0, 1.0, 1.0);
        let mut summary = HsVerifySummary::default();
        let mut json = ptr::null_mut();
        assert_eq!(hs_verify(inst, 0.5, 7, 4, &mut summary, &mut json), HsStatus::Ok);
        assert!(summary.all_passed);
        assert!(summary.checks_total > 100);
        assert_eq!(summary.checks_passed, summary.checks_total);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        hs_string_free(json);
        let report: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(report["command"], "verify");
        assert_eq!(hs_verify(inst, 0.0, 7, 4, &mut summary, ptr::null_mut()), HsStatus::InvalidArgument);
        hs_instance_free(inst);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hetsched.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("HS_STATUS_OK = 0"));
}
