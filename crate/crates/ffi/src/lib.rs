//! C ABI for the selection engine: opaque handles, integer status codes,
//! and a thread-local last-error message.
//!
//! Handle lifecycle: `apx_scenario_*` builds and tweaks a scenario,
//! `apx_run` produces a selection, `apx_selection_eval` queries it, and
//! the matching `*_free` functions release each handle.  All functions
//! tolerate null pointers and report `APX_STATUS_NULL_ARGUMENT`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use apxsel::config::parse_config;
use apxsel::geometry::Point;
use apxsel::pipeline::{run_pipeline, Scenario, SelectionResult, Variant};
use apxsel::report::render_report;
use apxsel::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ApxStatus {
    ApxStatusOk = 0,
    /// Internal error (I/O, panic, unexpected state).
    ApxStatusInternal = 1,
    /// Invalid configuration or argument value.
    ApxStatusConfig = 2,
    /// A pipeline stage audit or the final certificate failed.
    ApxStatusAudit = 3,
    /// A required pointer argument was null.
    ApxStatusNullArgument = 4,
}

pub struct ApxScenario {
    inner: Scenario,
}

pub struct ApxSelection {
    scenario: Scenario,
    result: SelectionResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> ApxStatus {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) => ApxStatus::ApxStatusConfig,
        Error::AuditFailure { .. }
        | Error::Verification(_)
        | Error::SubdivisionBudget { .. }
        | Error::RadiusUnderflow(_) => ApxStatus::ApxStatusAudit,
        _ => ApxStatus::ApxStatusInternal,
    }
}

fn fail(err: &Error) -> ApxStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Message for the most recent error on this thread; borrowed, valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn apx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

/// Builds one of the built-in scenarios by name; null on unknown names.
#[no_mangle]
pub unsafe extern "C" fn apx_scenario_builtin(name: *const c_char) -> *mut ApxScenario {
    let Some(name) = cstr(name) else {
        set_error("scenario name is null or not UTF-8");
        return std::ptr::null_mut();
    };
    match Scenario::builtin(name) {
        Some(inner) => Box::into_raw(Box::new(ApxScenario { inner })),
        None => {
            set_error(&format!("unknown built-in scenario {name}"));
            std::ptr::null_mut()
        }
    }
}

/// Parses flat key=value configuration text; null on schema errors.
#[no_mangle]
pub unsafe extern "C" fn apx_scenario_from_config(text: *const c_char) -> *mut ApxScenario {
    let Some(text) = cstr(text) else {
        set_error("configuration text is null or not UTF-8");
        return std::ptr::null_mut();
    };
    match parse_config(text, std::path::Path::new(".")) {
        Ok(cfg) => Box::into_raw(Box::new(ApxScenario {
            inner: cfg.scenario,
        })),
        Err(e) => {
            fail(&e);
            std::ptr::null_mut()
        }
    }
}

/// Selects the construction variant: 0 = glued, 1 = skeleton filtration.
#[no_mangle]
pub unsafe extern "C" fn apx_scenario_set_variant(
    scenario: *mut ApxScenario,
    variant: i32,
) -> ApxStatus {
    let Some(s) = scenario.as_mut() else {
        set_error("scenario handle is null");
        return ApxStatus::ApxStatusNullArgument;
    };
    s.inner.variant = match variant {
        0 => Variant::UvInfty,
        1 => Variant::UvOmega,
        _ => {
            set_error("variant must be 0 or 1");
            return ApxStatus::ApxStatusConfig;
        }
    };
    ApxStatus::ApxStatusOk
}

#[no_mangle]
pub unsafe extern "C" fn apx_scenario_set_samples(
    scenario: *mut ApxScenario,
    samples: usize,
) -> ApxStatus {
    let Some(s) = scenario.as_mut() else {
        set_error("scenario handle is null");
        return ApxStatus::ApxStatusNullArgument;
    };
    if samples == 0 {
        set_error("sample count must be positive");
        return ApxStatus::ApxStatusConfig;
    }
    s.inner.samples = samples;
    ApxStatus::ApxStatusOk
}

#[no_mangle]
pub unsafe extern "C" fn apx_scenario_set_seed(
    scenario: *mut ApxScenario,
    seed: u64,
) -> ApxStatus {
    let Some(s) = scenario.as_mut() else {
        set_error("scenario handle is null");
        return ApxStatus::ApxStatusNullArgument;
    };
    s.inner.seed = seed;
    ApxStatus::ApxStatusOk
}

#[no_mangle]
pub unsafe extern "C" fn apx_scenario_free(scenario: *mut ApxScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the full pipeline; null on any stage failure (see
/// `apx_last_error_message`).  The scenario handle stays owned by the
/// caller.
#[no_mangle]
pub unsafe extern "C" fn apx_run(scenario: *const ApxScenario) -> *mut ApxSelection {
    let Some(s) = scenario.as_ref() else {
        set_error("scenario handle is null");
        return std::ptr::null_mut();
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| run_pipeline(&s.inner)));
    match outcome {
        Ok(Ok(result)) => Box::into_raw(Box::new(ApxSelection {
            scenario: s.inner.clone(),
            result,
        })),
        Ok(Err(e)) => {
            fail(&e);
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic during pipeline run");
            std::ptr::null_mut()
        }
    }
}

/// Domain dimension of a built selection.
#[no_mangle]
pub unsafe extern "C" fn apx_selection_domain_dim(selection: *const ApxSelection) -> usize {
    selection
        .as_ref()
        .map_or(0, |s| s.scenario.domain.ambient_dim())
}

/// Dimension of the value space the selection maps into.
#[no_mangle]
pub unsafe extern "C" fn apx_selection_value_dim(selection: *const ApxSelection) -> usize {
    selection
        .as_ref()
        .map_or(0, |s| s.result.report.records[0].fx.dim())
}

/// Evaluates f at the point `x` (length `x_len`), writing the image into
/// `out` (length `out_len`).
#[no_mangle]
pub unsafe extern "C" fn apx_selection_eval(
    selection: *const ApxSelection,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> ApxStatus {
    let Some(s) = selection.as_ref() else {
        set_error("selection handle is null");
        return ApxStatus::ApxStatusNullArgument;
    };
    if x.is_null() || out.is_null() {
        set_error("point buffers are null");
        return ApxStatus::ApxStatusNullArgument;
    }
    if x_len != s.scenario.domain.ambient_dim() {
        set_error("input point has the wrong dimension");
        return ApxStatus::ApxStatusConfig;
    }
    let point = Point::new(std::slice::from_raw_parts(x, x_len).to_vec());
    let image = match catch_unwind(AssertUnwindSafe(|| s.result.selection.eval(&point))) {
        Ok(Ok(p)) => p,
        Ok(Err(e)) => return fail(&e),
        Err(_) => {
            set_error("internal panic during evaluation");
            return ApxStatus::ApxStatusInternal;
        }
    };
    if out_len != image.dim() {
        set_error("output buffer has the wrong dimension");
        return ApxStatus::ApxStatusConfig;
    }
    std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&image.coords);
    ApxStatus::ApxStatusOk
}

/// Smallest certificate margin `ε(x) − dist(f(x), φ(x))` over the
/// verification samples; positive for every returned selection.
#[no_mangle]
pub unsafe extern "C" fn apx_selection_min_margin(selection: *const ApxSelection) -> f64 {
    selection
        .as_ref()
        .map_or(f64::NAN, |s| s.result.report.min_margin)
}

/// The deterministic JSON run report; free with `apx_string_free`.
#[no_mangle]
pub unsafe extern "C" fn apx_selection_report_json(
    selection: *const ApxSelection,
) -> *mut c_char {
    let Some(s) = selection.as_ref() else {
        set_error("selection handle is null");
        return std::ptr::null_mut();
    };
    let text = render_report(&s.result, &s.scenario);
    CString::new(text).map_or(std::ptr::null_mut(), CString::into_raw)
}

#[no_mangle]
pub unsafe extern "C" fn apx_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

#[no_mangle]
pub unsafe extern "C" fn apx_selection_free(selection: *mut ApxSelection) {
    if !selection.is_null() {
        drop(Box::from_raw(selection));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn full_session_through_the_c_interface() {
        unsafe {
            let name = c("translating_disk");
            let sc = apx_scenario_builtin(name.as_ptr());
            assert!(!sc.is_null());
            assert_eq!(
                apx_scenario_set_samples(sc, 1000),
                ApxStatus::ApxStatusOk
            );
            assert_eq!(apx_scenario_set_variant(sc, 1), ApxStatus::ApxStatusOk);
            assert_eq!(apx_scenario_set_seed(sc, 5), ApxStatus::ApxStatusOk);
            let sel = apx_run(sc);
            assert!(!sel.is_null());
            assert_eq!(apx_selection_domain_dim(sel), 1);
            assert_eq!(apx_selection_value_dim(sel), 2);
            assert!(apx_selection_min_margin(sel) > 0.0);

            let x = [0.37f64];
            let mut out = [0.0f64; 2];
            assert_eq!(
                apx_selection_eval(sel, x.as_ptr(), 1, out.as_mut_ptr(), 2),
                ApxStatus::ApxStatusOk
            );
            // The selected point lies within eps of the disk at x.
            let d = ((out[0] - 0.37).powi(2) + out[1].powi(2)).sqrt();
            assert!(d < 1.0 + 0.3);

            let json = apx_selection_report_json(sel);
            assert!(!json.is_null());
            let text = CStr::from_ptr(json).to_str().unwrap();
            assert!(text.contains("\"variant\": \"uv_omega\""));
            apx_string_free(json);

            apx_selection_free(sel);
            apx_scenario_free(sc);
        }
    }

    #[test]
    fn config_text_and_error_codes() {
        unsafe {
            let good = c("domain.kind=interval\nmap.kind=constant\nrun.samples=200");
            let sc = apx_scenario_from_config(good.as_ptr());
            assert!(!sc.is_null());
            apx_scenario_free(sc);

            let bad = c("map.kind=warp");
            assert!(apx_scenario_from_config(bad.as_ptr()).is_null());
            let msg = CStr::from_ptr(apx_last_error_message()).to_str().unwrap();
            assert!(msg.contains("domain.kind") || msg.contains("config"));

            assert!(apx_scenario_builtin(c("nope").as_ptr()).is_null());
            assert_eq!(
                apx_scenario_set_variant(std::ptr::null_mut(), 0),
                ApxStatus::ApxStatusNullArgument
            );
        }
    }

    #[test]
    fn infeasible_tolerance_reports_audit_failure() {
        unsafe {
            let cfg = c(
                "domain.kind=interval\nmap.kind=translating\nmap.rate=1.0\neps.constant=0.000001",
            );
            let sc = apx_scenario_from_config(cfg.as_ptr());
            assert!(!sc.is_null());
            assert!(apx_run(sc).is_null());
            let msg = CStr::from_ptr(apx_last_error_message()).to_str().unwrap();
            assert!(msg.contains("budget"), "{msg}");
            apx_scenario_free(sc);
        }
    }
}
