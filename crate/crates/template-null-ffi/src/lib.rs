//! C ABI for the clinic-side surface: load a template artifact, load
//! trial CSVs, and assess subjects.
//!
//! Conventions: functions return a `TnStatus` code and write results
//! through out-pointers; `TN_OK` is zero. Handles returned through
//! `*mut` out-parameters own their data and must be released with the
//! matching `*_free` function. On any non-OK status,
//! `tn_last_error_message` returns a thread-local, NUL-terminated
//! description valid until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;

use template_null::data::Dataset;
use template_null::decision;
use template_null::error::Error;
use template_null::estimator;
use template_null::template::TemplateDistribution;

/// Opaque handle over a loaded template distribution.
pub struct TnTemplate(TemplateDistribution);

/// Opaque handle over a validated trial dataset.
pub struct TnDataset(Dataset);

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnStatus {
    TnOk = 0,
    TnErrNullArgument = 1,
    TnErrUtf8 = 2,
    TnErrIo = 3,
    TnErrParse = 4,
    TnErrValidation = 5,
    TnErrDesignMismatch = 6,
    TnErrArtifact = 7,
    TnErrConfig = 8,
    TnErrUnknownSubject = 9,
}

/// One assessment row. `decision_abnormal` is 1 when the null hypothesis
/// of healthy scaling was rejected. `ci_defined` is 0 when no condition
/// holds repeated trials; the interval fields are then NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TnAssessment {
    pub scaling_factor: f64,
    pub delta_hat: f64,
    pub p_value: f64,
    pub post_hoc_power: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub decision_abnormal: i32,
    pub ci_defined: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn fail(status: TnStatus, message: &str) -> TnStatus {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
    status
}

fn fail_error(e: &Error) -> TnStatus {
    let status = match e {
        Error::Io { .. } => TnStatus::TnErrIo,
        Error::Parse { .. } => TnStatus::TnErrParse,
        Error::Validation(_) | Error::Sampler(_) => TnStatus::TnErrValidation,
        Error::Design(_) => TnStatus::TnErrValidation,
        Error::DesignMismatch(_) => TnStatus::TnErrDesignMismatch,
        Error::Config(_) => TnStatus::TnErrConfig,
        Error::Artifact(_) => TnStatus::TnErrArtifact,
    };
    fail(status, &e.to_string())
}

/// # Safety
/// `ptr` must be a valid NUL-terminated string or NULL.
unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, TnStatus> {
    if ptr.is_null() {
        return Err(fail(TnStatus::TnErrNullArgument, "path is NULL"));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => Err(fail(TnStatus::TnErrUtf8, "path is not valid UTF-8")),
    }
}

/// Message describing the most recent failure on this thread; valid
/// until the next failing call on the same thread. Never NULL.
#[no_mangle]
pub extern "C" fn tn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Load a template artifact (JSON) from `path` into `*out`.
///
/// # Safety
/// `path` must be NUL-terminated or NULL; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tn_template_load(
    path: *const c_char,
    out: *mut *mut TnTemplate,
) -> TnStatus {
    if out.is_null() {
        return fail(TnStatus::TnErrNullArgument, "out is NULL");
    }
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match TemplateDistribution::load_json(&path) {
        Ok(t) => {
            *out = Box::into_raw(Box::new(TnTemplate(t)));
            TnStatus::TnOk
        }
        Err(e) => fail_error(&e),
    }
}

/// Release a template handle. NULL is a no-op.
///
/// # Safety
/// `t` must come from `tn_template_load` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tn_template_free(t: *mut TnTemplate) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of slope draws in the template, or 0 for NULL.
///
/// # Safety
/// `t` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn tn_template_len(t: *const TnTemplate) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

/// Posterior benchmark of the healthy scaling factor (NaN for NULL).
///
/// # Safety
/// `t` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn tn_template_benchmark_slope(t: *const TnTemplate) -> f64 {
    t.as_ref().map_or(f64::NAN, |t| t.0.benchmark_slope())
}

/// Lower empirical quantile of the template at `level`.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tn_template_critical_value(
    t: *const TnTemplate,
    level: f64,
    out: *mut f64,
) -> TnStatus {
    let (Some(t), false) = (t.as_ref(), out.is_null()) else {
        return fail(TnStatus::TnErrNullArgument, "template or out is NULL");
    };
    match t.0.critical_value(level) {
        Ok(v) => {
            *out = v;
            TnStatus::TnOk
        }
        Err(e) => fail_error(&e),
    }
}

/// Add-one empirical one-sided p-value of a slope under the template.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tn_template_p_value(
    t: *const TnTemplate,
    beta_bar: f64,
    out: *mut f64,
) -> TnStatus {
    let (Some(t), false) = (t.as_ref(), out.is_null()) else {
        return fail(TnStatus::TnErrNullArgument, "template or out is NULL");
    };
    match decision::p_value(&t.0, beta_bar) {
        Ok(v) => {
            *out = v;
            TnStatus::TnOk
        }
        Err(e) => fail_error(&e),
    }
}

/// Load and validate a trial CSV
/// (`subject_id,weight_grams,trial,plfr,plfr_log`).
///
/// # Safety
/// `path` must be NUL-terminated or NULL; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tn_dataset_load_csv(
    path: *const c_char,
    out: *mut *mut TnDataset,
) -> TnStatus {
    if out.is_null() {
        return fail(TnStatus::TnErrNullArgument, "out is NULL");
    }
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match template_null::data::ingest_csv(&path, None) {
        Ok(d) => {
            *out = Box::into_raw(Box::new(TnDataset(d)));
            TnStatus::TnOk
        }
        Err(e) => fail_error(&e),
    }
}

/// Release a dataset handle. NULL is a no-op.
///
/// # Safety
/// `d` must come from `tn_dataset_load_csv` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tn_dataset_free(d: *mut TnDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of distinct subjects, or 0 for NULL.
///
/// # Safety
/// `d` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn tn_dataset_n_subjects(d: *const TnDataset) -> usize {
    d.as_ref().map_or(0, |d| d.0.n_subjects())
}

/// Copy the `index`-th subject id (first-appearance order) into `buf` as
/// a NUL-terminated string. Fails when the buffer is too small.
///
/// # Safety
/// `d` must be a live handle; `buf` must point to `buf_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tn_dataset_subject_id(
    d: *const TnDataset,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
) -> TnStatus {
    let (Some(d), false) = (d.as_ref(), buf.is_null()) else {
        return fail(TnStatus::TnErrNullArgument, "dataset or buf is NULL");
    };
    let ids = d.0.subject_ids();
    let Some(id) = ids.get(index) else {
        return fail(
            TnStatus::TnErrValidation,
            &format!("subject index {index} out of range ({} subjects)", ids.len()),
        );
    };
    let bytes = id.as_bytes();
    if buf_len < bytes.len() + 1 {
        return fail(
            TnStatus::TnErrValidation,
            &format!(
                "buffer of {buf_len} bytes too small for id of {} bytes",
                bytes.len()
            ),
        );
    }
    std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
    *buf.add(bytes.len()) = 0;
    TnStatus::TnOk
}

fn subject_trials(
    d: &TnDataset,
    subject_id: &str,
) -> Result<template_null::data::SubjectTrials, TnStatus> {
    if !d.0.subject_ids().contains(&subject_id) {
        return Err(fail(
            TnStatus::TnErrUnknownSubject,
            &format!("no subject '{subject_id}' in the dataset"),
        ));
    }
    d.0.subject_trials(subject_id).map_err(|e| fail_error(&e))
}

/// Naive slope (log-N/ms per kg) of one subject's trials.
///
/// # Safety
/// `d` must be a live handle; `subject_id` NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tn_naive_slope(
    d: *const TnDataset,
    subject_id: *const c_char,
    out: *mut f64,
) -> TnStatus {
    let (Some(d), false, false) = (d.as_ref(), subject_id.is_null(), out.is_null()) else {
        return fail(TnStatus::TnErrNullArgument, "argument is NULL");
    };
    let Ok(sid) = CStr::from_ptr(subject_id).to_str() else {
        return fail(TnStatus::TnErrUtf8, "subject id is not valid UTF-8");
    };
    let trials = match subject_trials(d, sid) {
        Ok(t) => t,
        Err(s) => return s,
    };
    match estimator::naive_slope(&trials) {
        Ok(ns) => {
            *out = ns.value;
            TnStatus::TnOk
        }
        Err(e) => fail_error(&e),
    }
}

/// Assess one subject against a template at test level `level`; `seed`
/// drives the bootstrap interval.
///
/// # Safety
/// `t` and `d` must be live handles; `subject_id` NUL-terminated;
/// `out` must point to a writable `TnAssessment`.
#[no_mangle]
pub unsafe extern "C" fn tn_assess(
    t: *const TnTemplate,
    d: *const TnDataset,
    subject_id: *const c_char,
    level: f64,
    seed: u64,
    out: *mut TnAssessment,
) -> TnStatus {
    let (Some(t), Some(d), false, false) =
        (t.as_ref(), d.as_ref(), subject_id.is_null(), out.is_null())
    else {
        return fail(TnStatus::TnErrNullArgument, "argument is NULL");
    };
    let Ok(sid) = CStr::from_ptr(subject_id).to_str() else {
        return fail(TnStatus::TnErrUtf8, "subject id is not valid UTF-8");
    };
    let trials = match subject_trials(d, sid) {
        Ok(tr) => tr,
        Err(s) => return s,
    };
    match decision::assess(&t.0, &trials, level, seed) {
        Ok(r) => {
            let (ci_lower, ci_upper, ci_defined) = match r.slope_ci {
                Some((lo, hi)) => (lo, hi, 1),
                None => (f64::NAN, f64::NAN, 0),
            };
            *out = TnAssessment {
                scaling_factor: r.scaling_factor,
                delta_hat: r.delta_hat,
                p_value: r.p_value,
                post_hoc_power: r.post_hoc_power,
                ci_lower,
                ci_upper,
                decision_abnormal: i32::from(r.decision == decision::Decision::Abnormal),
                ci_defined,
            };
            TnStatus::TnOk
        }
        Err(e) => fail_error(&e),
    }
}
