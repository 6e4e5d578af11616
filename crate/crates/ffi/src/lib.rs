//! C ABI over the pipeline.
//!
//! The handle is opaque; calls report failure through a status code
//! plus a thread-local message readable with [`dc_last_error`].
//! Strings cross the boundary as NUL-terminated UTF-8. Nothing here
//! panics across the boundary: bad arguments come back as
//! `DC_ERR_ARG`, pipeline failures as their own codes.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::{Path, PathBuf};
use std::ptr;

use drivecycle::clustering::ClusterMethod;
use drivecycle::config::PipelineConfig;
use drivecycle::ingest::read_trace_file;
use drivecycle::pipeline::{run_pipeline, RunSummary, Stage};
use drivecycle::synthgen::{generate, write_fixture, GenConfig};
use drivecycle::Error;

/// Outcome of a call. Anything but `DC_OK` leaves a message for
/// [`dc_last_error`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcStatus {
    DcOk = 0,
    DcErrPipeline = 1,
    DcErrIo = 2,
    DcErrArg = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(e: &Error) -> DcStatus {
    match e {
        Error::Io(_) => DcStatus::DcErrIo,
        Error::Config(_) => DcStatus::DcErrArg,
        _ => DcStatus::DcErrPipeline,
    }
}

/// An owned pipeline: configuration plus the results of its last run.
pub struct DcPipeline {
    cfg: PipelineConfig,
    method: ClusterMethod,
    summary: Option<RunSummary>,
    cycle: Option<Vec<f64>>,
}

unsafe fn arg_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, DcStatus> {
    if p.is_null() {
        set_error(&format!("{what} is null"));
        return Err(DcStatus::DcErrArg);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        DcStatus::DcErrArg
    })
}

unsafe fn handle_mut<'a>(p: *mut DcPipeline) -> Result<&'a mut DcPipeline, DcStatus> {
    if p.is_null() {
        set_error("pipeline handle is null");
        return Err(DcStatus::DcErrArg);
    }
    Ok(&mut *p)
}

unsafe fn handle_ref<'a>(p: *const DcPipeline) -> Result<&'a DcPipeline, DcStatus> {
    if p.is_null() {
        set_error("pipeline handle is null");
        return Err(DcStatus::DcErrArg);
    }
    Ok(&*p)
}

/// Message from the most recent failing call on this thread. The
/// pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn dc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// New pipeline with the default configuration. Free with
/// [`dc_pipeline_free`].
#[no_mangle]
pub extern "C" fn dc_pipeline_new() -> *mut DcPipeline {
    Box::into_raw(Box::new(DcPipeline {
        cfg: PipelineConfig::default(),
        method: ClusterMethod::MeanShift,
        summary: None,
        cycle: None,
    }))
}

/// New pipeline from a JSON configuration string. Returns null on a
/// bad configuration and leaves the reason in [`dc_last_error`].
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn dc_pipeline_new_json(config_json: *const c_char) -> *mut DcPipeline {
    let text = match arg_str(config_json, "config_json") {
        Ok(t) => t,
        Err(_) => return ptr::null_mut(),
    };
    match PipelineConfig::from_json(text) {
        Ok(cfg) => Box::into_raw(Box::new(DcPipeline {
            cfg,
            method: ClusterMethod::MeanShift,
            summary: None,
            cycle: None,
        })),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Free a pipeline. Null is tolerated.
///
/// # Safety
/// `p` must be a pointer from `dc_pipeline_new*`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_pipeline_free(p: *mut DcPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live pipeline handle.
#[no_mangle]
pub unsafe extern "C" fn dc_pipeline_set_seed(p: *mut DcPipeline, seed: u64) -> DcStatus {
    match handle_mut(p) {
        Ok(h) => {
            h.cfg.seed = seed;
            DcStatus::DcOk
        }
        Err(s) => s,
    }
}

/// Select the clustering method: "mean-shift" or "kmeans".
///
/// # Safety
/// `p` must be a live pipeline handle; `method` a valid string.
#[no_mangle]
pub unsafe extern "C" fn dc_pipeline_set_method(
    p: *mut DcPipeline,
    method: *const c_char,
) -> DcStatus {
    let h = match handle_mut(p) {
        Ok(h) => h,
        Err(s) => return s,
    };
    let name = match arg_str(method, "method") {
        Ok(t) => t,
        Err(s) => return s,
    };
    match name {
        "mean-shift" => h.method = ClusterMethod::MeanShift,
        "kmeans" => h.method = ClusterMethod::Kmeans,
        other => {
            set_error(&format!("unknown method {other:?}; use mean-shift or kmeans"));
            return DcStatus::DcErrArg;
        }
    }
    DcStatus::DcOk
}

/// Run the full pipeline over `n_inputs` CSV trace files, writing
/// artifacts into `out_dir`. On success the handle holds the summary
/// and the assembled cycle.
///
/// # Safety
/// `p` must be a live handle; `inputs` must point to `n_inputs` valid
/// strings; `out_dir` must be a valid string.
#[no_mangle]
pub unsafe extern "C" fn dc_pipeline_run(
    p: *mut DcPipeline,
    inputs: *const *const c_char,
    n_inputs: usize,
    out_dir: *const c_char,
) -> DcStatus {
    let h = match handle_mut(p) {
        Ok(h) => h,
        Err(s) => return s,
    };
    let out = match arg_str(out_dir, "out_dir") {
        Ok(t) => PathBuf::from(t),
        Err(s) => return s,
    };
    if inputs.is_null() || n_inputs == 0 {
        set_error("inputs is null or empty");
        return DcStatus::DcErrArg;
    }
    let mut paths = Vec::with_capacity(n_inputs);
    for i in 0..n_inputs {
        match arg_str(*inputs.add(i), "input path") {
            Ok(t) => paths.push(PathBuf::from(t)),
            Err(s) => return s,
        }
    }
    match run_pipeline(&paths, &h.cfg, h.method, &out, Stage::Evaluate) {
        Ok(summary) => {
            h.summary = Some(summary);
            match read_trace_file(&out.join("cycle.csv")) {
                Ok(trace) => {
                    h.cycle = Some(trace.records.iter().map(|r| r.v).collect());
                    DcStatus::DcOk
                }
                Err(e) => {
                    set_error(&format!("cycle written but unreadable: {e}"));
                    DcStatus::DcErrIo
                }
            }
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Seconds in the assembled cycle, or 0 before a successful run.
///
/// # Safety
/// `p` must be a live pipeline handle.
#[no_mangle]
pub unsafe extern "C" fn dc_pipeline_cycle_len(p: *const DcPipeline) -> usize {
    match handle_ref(p) {
        Ok(h) => h.cycle.as_ref().map_or(0, |c| c.len()),
        Err(_) => 0,
    }
}

/// Copy the cycle's speed samples (km/h, one per second) into `buf`.
/// `cap` must be at least [`dc_pipeline_cycle_len`].
///
/// # Safety
/// `p` must be a live handle; `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn dc_pipeline_cycle_speeds(
    p: *const DcPipeline,
    buf: *mut f64,
    cap: usize,
) -> DcStatus {
    let h = match handle_ref(p) {
        Ok(h) => h,
        Err(s) => return s,
    };
    let Some(cycle) = &h.cycle else {
        set_error("no cycle yet; run the pipeline first");
        return DcStatus::DcErrPipeline;
    };
    if buf.is_null() || cap < cycle.len() {
        set_error(&format!("buffer holds {cap} samples, cycle has {}", cycle.len()));
        return DcStatus::DcErrArg;
    }
    ptr::copy_nonoverlapping(cycle.as_ptr(), buf, cycle.len());
    DcStatus::DcOk
}

/// Last run's summary as a JSON string, or null before a successful
/// run. Free the result with [`dc_string_free`].
///
/// # Safety
/// `p` must be a live pipeline handle.
#[no_mangle]
pub unsafe extern "C" fn dc_pipeline_summary_json(p: *const DcPipeline) -> *mut c_char {
    let h = match handle_ref(p) {
        Ok(h) => h,
        Err(_) => return ptr::null_mut(),
    };
    let Some(summary) = &h.summary else {
        set_error("no summary yet; run the pipeline first");
        return ptr::null_mut();
    };
    let text = drivecycle::pipeline::summary_to_json(summary);
    match CString::new(text) {
        Ok(c) => c.into_raw(),
        Err(_) => {
            set_error("summary contained an interior NUL");
            ptr::null_mut()
        }
    }
}

/// Free a string returned by this library. Null is tolerated.
///
/// # Safety
/// `s` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generate the synthetic benchmark corpus into `out_dir`. Pass null
/// for the default generator configuration, or a JSON string.
///
/// # Safety
/// `out_dir` must be a valid string; `config_json` a valid string or
/// null.
#[no_mangle]
pub unsafe extern "C" fn dc_synth_gen(
    out_dir: *const c_char,
    config_json: *const c_char,
) -> DcStatus {
    let out = match arg_str(out_dir, "out_dir") {
        Ok(t) => PathBuf::from(t),
        Err(s) => return s,
    };
    let cfg = if config_json.is_null() {
        GenConfig::default()
    } else {
        let text = match arg_str(config_json, "config_json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match GenConfig::from_json(text) {
            Ok(c) => c,
            Err(e) => {
                set_error(&e.to_string());
                return DcStatus::DcErrArg;
            }
        }
    };
    let run = || -> drivecycle::Result<()> {
        let fx = generate(&cfg)?;
        write_fixture(Path::new(&out), &fx)?;
        Ok(())
    };
    match run() {
        Ok(()) => DcStatus::DcOk,
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}
