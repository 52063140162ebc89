//! C ABI for the robust-fusion library: opaque instance handles, status
//! codes, and value/strategy entry points. The matching header is generated
//! into `include/robust_fusion.h` at build time.

use robust_fusion::cli::parse_instance;
use robust_fusion::model::{bayes_value, composite_label, DecisionProblem, Experiment};
use robust_fusion::robust::{best_single_source, robust_strategy, robust_value};
use robust_fusion::{Error, DEFAULT_CELL_CAP};
use serde_json::json;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

/// Status codes returned by every fallible entry point. On any nonzero
/// status, `rf_last_error` carries a human-readable message.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    TooLarge = 5,
    NumericalError = 6,
    IndexOutOfRange = 7,
}

/// An opaque, immutable problem instance: a decision problem plus its
/// information sources. Create with `rf_instance_parse_json`, release with
/// `rf_instance_free`.
pub struct RfInstance {
    problem: DecisionProblem,
    experiments: Vec<Experiment>,
    cap: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: RfStatus, message: impl Into<Vec<u8>>) -> RfStatus {
    let message = CString::new(message).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
    status
}

fn fail_error(err: Error) -> RfStatus {
    let status = match &err {
        Error::Parse(_) => RfStatus::ParseError,
        Error::InstanceTooLarge { .. } | Error::TOverflow { .. } => RfStatus::TooLarge,
        Error::Numerical(_) | Error::TargetOutsidePolyhedron => RfStatus::NumericalError,
        Error::Io(_) => RfStatus::ParseError,
        _ => RfStatus::ValidationError,
    };
    fail(status, err.to_string())
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses an instance JSON document (same schema as the CLI instance files)
/// into a fresh handle stored in `*out`.
///
/// # Safety
/// `json` must be a valid NUL-terminated C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_instance_parse_json(
    json: *const c_char,
    out: *mut *mut RfInstance,
) -> RfStatus {
    if json.is_null() || out.is_null() {
        return fail(RfStatus::NullArgument, "null argument");
    }
    *out = ptr::null_mut();
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(e) => return fail(RfStatus::InvalidUtf8, e.to_string()),
    };
    match parse_instance(text) {
        Ok((problem, experiments)) => {
            let handle = Box::new(RfInstance {
                problem,
                experiments,
                cap: DEFAULT_CELL_CAP,
            });
            *out = Box::into_raw(handle);
            RfStatus::Ok
        }
        Err(err) => fail_error(err),
    }
}

/// Releases a handle created by `rf_instance_parse_json`. Passing NULL is a
/// no-op.
///
/// # Safety
/// `instance` must be NULL or a pointer previously returned by
/// `rf_instance_parse_json` that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn rf_instance_free(instance: *mut RfInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of information sources in the instance.
///
/// # Safety
/// `instance` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rf_source_count(instance: *const RfInstance) -> usize {
    if instance.is_null() {
        return 0;
    }
    (*instance).experiments.len()
}

/// Worst-case (maxmin) value over all couplings of the sources.
///
/// # Safety
/// `instance` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_robust_value(
    instance: *const RfInstance,
    out: *mut f64,
) -> RfStatus {
    if instance.is_null() || out.is_null() {
        return fail(RfStatus::NullArgument, "null argument");
    }
    let inst = &*instance;
    match robust_value(&inst.experiments, &inst.problem, inst.cap) {
        Ok(v) => {
            *out = v;
            RfStatus::Ok
        }
        Err(err) => fail_error(err),
    }
}

/// Classical Bayes value of the single source `index`.
///
/// # Safety
/// `instance` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_bayes_value(
    instance: *const RfInstance,
    index: usize,
    out: *mut f64,
) -> RfStatus {
    if instance.is_null() || out.is_null() {
        return fail(RfStatus::NullArgument, "null argument");
    }
    let inst = &*instance;
    if index >= inst.experiments.len() {
        return fail(RfStatus::IndexOutOfRange, "source index out of range");
    }
    match bayes_value(&inst.experiments[index], &inst.problem) {
        Ok(v) => {
            *out = v;
            RfStatus::Ok
        }
        Err(err) => fail_error(err),
    }
}

/// Index and value of the best single source (ties to the lowest index).
///
/// # Safety
/// `instance` must be a live handle; `out_index` and `out_value` valid.
#[no_mangle]
pub unsafe extern "C" fn rf_best_single_source(
    instance: *const RfInstance,
    out_index: *mut usize,
    out_value: *mut f64,
) -> RfStatus {
    if instance.is_null() || out_index.is_null() || out_value.is_null() {
        return fail(RfStatus::NullArgument, "null argument");
    }
    let inst = &*instance;
    match best_single_source(&inst.experiments, &inst.problem) {
        Ok((j, v)) => {
            *out_index = j;
            *out_value = v;
            RfStatus::Ok
        }
        Err(err) => fail_error(err),
    }
}

/// Robustly optimal strategy as a JSON document (value, certificate, and
/// the per-signal action distributions). The string must be released with
/// `rf_string_free`.
///
/// # Safety
/// `instance` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_robust_strategy_json(
    instance: *const RfInstance,
    out: *mut *mut c_char,
) -> RfStatus {
    if instance.is_null() || out.is_null() {
        return fail(RfStatus::NullArgument, "null argument");
    }
    *out = ptr::null_mut();
    let inst = &*instance;
    let sol = match robust_strategy(&inst.experiments, &inst.problem, inst.cap) {
        Ok(sol) => sol,
        Err(err) => return fail_error(err),
    };
    let table: Vec<_> = sol
        .strategy
        .space
        .iter()
        .enumerate()
        .map(|(cell, coords)| {
            json!({
                "signal": composite_label(&inst.experiments, &coords),
                "distribution": sol.strategy.row(cell),
            })
        })
        .collect();
    let doc = json!({
        "value": sol.value,
        "certificate_value": sol.certificate_value,
        "sources_used": sol.strategy.sources_used,
        "actions": inst.problem.actions,
        "table": table,
    });
    match CString::new(doc.to_string()) {
        Ok(s) => {
            *out = s.into_raw();
            RfStatus::Ok
        }
        Err(e) => fail(RfStatus::NumericalError, e.to_string()),
    }
}

/// Releases a string returned by this library. Passing NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a pointer returned by an `rf_*` function.
#[no_mangle]
pub unsafe extern "C" fn rf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
