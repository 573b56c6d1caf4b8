//! C ABI over `hetsched`.
//!
//! Handles are opaque and owned by the caller; every `*_new` or `*_from_*`
//! has a matching `*_free`. Functions return an [`HsStatus`] and write
//! results through out-pointers. After a non-`Ok` status,
//! [`hs_last_error`] describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hetsched::report::RunReport;
use hetsched::verify::{verify_instance, VerifyConfig};
use hetsched::{Error, Instance, Job, Metrics, Mode, PowerFunction, PowerSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    NonTerminating = 4,
    EnumerationCap = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsMode {
    Weighted = 0,
    Unweighted = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HsMetrics {
    pub fractional_weighted_flow: f64,
    pub integer_weighted_flow: f64,
    pub energy: f64,
    /// Fractional flow plus energy (weighted) or integer flow plus energy (unweighted).
    pub objective: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HsVerifySummary {
    pub checks_passed: u64,
    pub checks_total: u64,
    pub all_passed: bool,
}

/// A power function.
pub struct HsPower(PowerFunction);

/// An instance under construction: machines, jobs and a mode.
pub struct HsInstance {
    machines: Vec<PowerFunction>,
    jobs: Vec<Job>,
    mode: Mode,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NonTerminating(_) => HsStatus::NonTerminating,
            Error::EnumerationCap { .. } => HsStatus::EnumerationCap,
            _ => HsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HsStatus::NullPointer, format!("{what} is null"))
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HsStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            HsStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("string"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(HsStatus::Parse, format!("invalid UTF-8: {e}")))
}

fn metrics(m: &Metrics, mode: Mode) -> HsMetrics {
    HsMetrics {
        fractional_weighted_flow: m.fractional_weighted_flow,
        integer_weighted_flow: m.integer_weighted_flow,
        energy: m.energy,
        objective: m.objective(mode),
    }
}

impl HsInstance {
    fn build(&self) -> Result<Instance, Failure> {
        Ok(Instance::new(self.machines.clone(), self.jobs.clone(), self.mode)?)
    }
}

fn power_out(out: *mut *mut HsPower, spec: PowerSpec) -> Result<(), Failure> {
    let pf = PowerFunction::new(spec)?;
    unsafe { write(out, Box::into_raw(Box::new(HsPower(pf)))) }
}

/// Message for the last failure on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn hs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `P(s) = s^alpha`, `alpha > 1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_power_poly(alpha: f64, out: *mut *mut HsPower) -> HsStatus {
    guard(|| power_out(out, PowerSpec::Poly { alpha }))
}

/// Polynomial with `coefficients[k]` on `s^k`.
///
/// # Safety
/// `coefficients` must point to `len` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_power_affine(coefficients: *const f64, len: usize, out: *mut *mut HsPower) -> HsStatus {
    guard(|| {
        let coefficients = slice(coefficients, len, "coefficients")?.to_vec();
        power_out(out, PowerSpec::Affine { coefficients })
    })
}

/// Piecewise-linear table from `len` interleaved `(speed, power)` pairs.
///
/// # Safety
/// `pairs` must point to `2 * len` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_power_table(pairs: *const f64, len: usize, out: *mut *mut HsPower) -> HsStatus {
    guard(|| {
        let flat = slice(pairs, len.checked_mul(2).ok_or_else(|| null("pairs"))?, "pairs")?;
        let points = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        power_out(out, PowerSpec::Table { points })
    })
}

/// # Safety
/// `power` must come from an `hs_power_*` constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hs_power_free(power: *mut HsPower) {
    if !power.is_null() {
        drop(Box::from_raw(power));
    }
}

/// Power drawn at speed `s`.
///
/// # Safety
/// `power` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_power_eval(power: *const HsPower, s: f64, out: *mut f64) -> HsStatus {
    guard(|| {
        let p = borrow(power, "power")?;
        write(out, p.0.eval_power(s)?)
    })
}

/// Speed reached with power `y`.
///
/// # Safety
/// `power` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_power_speed(power: *const HsPower, y: f64, out: *mut f64) -> HsStatus {
    guard(|| {
        let p = borrow(power, "power")?;
        write(out, p.0.eval_speed(y)?)
    })
}

/// Empty instance.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_new(mode: HsMode, out: *mut *mut HsInstance) -> HsStatus {
    guard(|| {
        let mode = match mode {
            HsMode::Weighted => Mode::Weighted,
            HsMode::Unweighted => Mode::Unweighted,
        };
        write(out, Box::into_raw(Box::new(HsInstance { machines: Vec::new(), jobs: Vec::new(), mode })))
    })
}

/// Instance from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_from_json(json: *const c_char, out: *mut *mut HsInstance) -> HsStatus {
    guard(|| {
        let inst: Instance = serde_json::from_str(text(json)?)
            .map_err(|e| Failure(HsStatus::Parse, format!("{}:{}: {e}", e.line(), e.column())))?;
        let handle = HsInstance { machines: inst.machines, jobs: inst.jobs, mode: inst.mode };
        write(out, Box::into_raw(Box::new(handle)))
    })
}

/// JSON form of the instance; free with [`hs_string_free`].
///
/// # Safety
/// `instance` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_to_json(instance: *const HsInstance, out: *mut *mut c_char) -> HsStatus {
    guard(|| {
        let inst = borrow(instance, "instance")?.build()?;
        let json = serde_json::to_string(&inst).expect("instances serialize");
        write(out, CString::new(json).expect("JSON has no NUL").into_raw())
    })
}

/// # Safety
/// `instance` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_free(instance: *mut HsInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Appends a copy of `power` as the next machine.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_add_machine(instance: *mut HsInstance, power: *const HsPower) -> HsStatus {
    guard(|| {
        let p = borrow(power, "power")?.0.clone();
        borrow_mut(instance, "instance")?.machines.push(p);
        Ok(())
    })
}

/// Appends a job. Unweighted instances need `weight == 1`.
///
/// # Safety
/// `instance` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_add_job(
    instance: *mut HsInstance,
    id: u64,
    release: f64,
    size: f64,
    weight: f64,
) -> HsStatus {
    guard(|| {
        let inst = borrow_mut(instance, "instance")?;
        if inst.jobs.iter().any(|j| j.id == id) {
            return Err(Failure(HsStatus::InvalidArgument, format!("duplicate job id {id}")));
        }
        let job = Job::new(id, release, size, weight)?;
        if inst.mode == Mode::Unweighted && weight != 1.0 {
            return Err(Failure(HsStatus::InvalidArgument, "unweighted jobs have weight 1".into()));
        }
        inst.jobs.push(job);
        Ok(())
    })
}

/// Runs the online policy at `speedup >= 1`.
///
/// # Safety
/// `instance` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_simulate(instance: *const HsInstance, speedup: f64, out: *mut HsMetrics) -> HsStatus {
    guard(|| {
        let inst = borrow(instance, "instance")?.build()?;
        let m = match inst.mode {
            Mode::Weighted => {
                let cfg = hetsched::WeightedSchedulerConfig::new(speedup)?;
                hetsched::weighted::simulate_weighted(&inst, &cfg)?.1
            }
            Mode::Unweighted => {
                let cfg = hetsched::UnweightedSchedulerConfig::new(speedup)?;
                hetsched::unweighted::simulate_unweighted(&inst, &cfg)?.1
            }
        };
        write(out, metrics(&m, inst.mode))
    })
}

/// Runs every check at `epsilon > 0` against the proxy and `adversaries`
/// random assignments drawn from `seed`. `report_json` may be null; otherwise
/// it receives the full report, to be freed with [`hs_string_free`].
///
/// # Safety
/// `instance` must be a live handle; `summary` must be valid for writes;
/// `report_json` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_verify(
    instance: *const HsInstance,
    epsilon: f64,
    seed: u64,
    adversaries: usize,
    summary: *mut HsVerifySummary,
    report_json: *mut *mut c_char,
) -> HsStatus {
    guard(|| {
        let inst = borrow(instance, "instance")?.build()?;
        let bound = hetsched::analysis::CompetitiveParams::new(epsilon)?.ratio_bound(inst.mode);
        let cfg = VerifyConfig { random_adversaries: adversaries, ..VerifyConfig::default() };
        let rep = verify_instance(&inst, epsilon, seed, &cfg)?;
        let (checks_passed, checks_total) = rep.checks.values().fold((0, 0), |(p, t), c| (p + c.passed, t + c.total));
        let report = RunReport::new("verify", inst.mode, vec![rep], &[Some(bound)]);
        write(summary, HsVerifySummary { checks_passed, checks_total, all_passed: report.summary.all_passed })?;
        if !report_json.is_null() {
            report_json.write(CString::new(report.to_json()).expect("JSON has no NUL").into_raw());
        }
        Ok(())
    })
}
