//! C ABI for ctxseg.
//!
//! Objects are exposed as opaque handles created by `ctx_*_new`, `ctx_*_read`
//! or `ctx_*_build` and released with the matching `ctx_*_free`. Fallible
//! calls return a [`CtxStatus`]; on failure a message describing the error is
//! available from [`ctx_last_error_message`] on the same thread. Panics never
//! cross the boundary: they are reported as [`CtxStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ctxseg::config::PipelineConfig;
use ctxseg::io::{read_feature_matrix, read_graph, write_graph, FeatureMatrix};
use ctxseg::pipeline::{run_pipeline, PipelineOutcome};
use ctxseg::propagation::{propagate_labels, PropagationConfig, Solver};
use ctxseg::simgraph::{build_knn_graph, SimilarityGraph};
use ctxseg::synth::{self, SynthConfig};
use ctxseg::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtxStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    NotConverged = 6,
    Panic = 7,
}

pub struct CtxConfig {
    inner: PipelineConfig,
}

pub struct CtxFeatures {
    inner: FeatureMatrix,
}

pub struct CtxGraph {
    inner: SimilarityGraph,
}

pub struct CtxOutcome {
    inner: PipelineOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: CtxStatus,
    message: String,
}

impl Failure {
    fn new(status: CtxStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn null(name: &str) -> Self {
        Self::new(CtxStatus::NullArgument, format!("argument `{name}` is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::Io { .. } => CtxStatus::Io,
            Error::Parse { .. } => CtxStatus::Parse,
            Error::NonConvergence { .. } => CtxStatus::NotConverged,
            _ => CtxStatus::Validation,
        };
        let mut message = e.to_string();
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            message.push_str(": ");
            message.push_str(&s.to_string());
            source = s.source();
        }
        Self::new(status, message)
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Run `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CtxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CtxStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            set_last_error(format!("internal panic: {msg}"));
            CtxStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::new(CtxStatus::InvalidUtf8, format!("argument `{name}` is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or_else(|| Failure::null(name))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }.ok_or_else(|| Failure::null(name))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ctx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null if the last call
/// succeeded. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn ctx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Default configuration. Never returns null.
#[no_mangle]
pub extern "C" fn ctx_config_default() -> *mut CtxConfig {
    Box::into_raw(Box::new(CtxConfig { inner: PipelineConfig::default() }))
}

/// Load a TOML configuration file.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_config_load(path: *const c_char, out: *mut *mut CtxConfig) -> CtxStatus {
    guard(|| {
        let path = unsafe { path_arg(path, "path") }?;
        let inner = PipelineConfig::load(path)?;
        unsafe { store(out, CtxConfig { inner }) }
    })
}

/// Set the seed that drives every randomized step.
///
/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_config_set_seed(cfg: *mut CtxConfig, seed: u64) -> CtxStatus {
    guard(|| {
        let cfg = unsafe { handle_mut(cfg, "cfg") }?;
        cfg.inner = cfg.inner.clone().with_seed(seed);
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ctx_config_free(cfg: *mut CtxConfig) {
    unsafe { release(cfg) }
}

/// Copy a row-major `rows x dim` matrix.
///
/// # Safety
/// `data` must point to `rows * dim` floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_features_new(
    data: *const f32,
    rows: usize,
    dim: usize,
    out: *mut *mut CtxFeatures,
) -> CtxStatus {
    guard(|| {
        if data.is_null() {
            return Err(Failure::null("data"));
        }
        let len = rows
            .checked_mul(dim)
            .ok_or_else(|| Failure::new(CtxStatus::Validation, "rows * dim overflows"))?;
        let values = unsafe { std::slice::from_raw_parts(data, len) }.to_vec();
        let inner = FeatureMatrix::new(rows, dim, values)?;
        unsafe { store(out, CtxFeatures { inner }) }
    })
}

/// Read a `.fmx` or `.csv` feature file.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_features_read(path: *const c_char, out: *mut *mut CtxFeatures) -> CtxStatus {
    guard(|| {
        let path = unsafe { path_arg(path, "path") }?;
        let inner = read_feature_matrix(path)?;
        unsafe { store(out, CtxFeatures { inner }) }
    })
}

/// Scale every row to unit length.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_features_normalize(f: *mut CtxFeatures) -> CtxStatus {
    guard(|| Ok(unsafe { handle_mut(f, "features") }?.inner.normalize_rows()?))
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_features_rows(f: *const CtxFeatures) -> usize {
    unsafe { f.as_ref() }.map_or(0, |f| f.inner.rows())
}

/// Row length, or 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_features_dim(f: *const CtxFeatures) -> usize {
    unsafe { f.as_ref() }.map_or(0, |f| f.inner.dim())
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ctx_features_free(f: *mut CtxFeatures) {
    unsafe { release(f) }
}

/// Build the k-nearest-neighbor graph over unit-length features.
///
/// # Safety
/// `f` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_graph_build(f: *const CtxFeatures, k: usize, out: *mut *mut CtxGraph) -> CtxStatus {
    guard(|| {
        let f = unsafe { handle(f, "features") }?;
        let inner = build_knn_graph(&f.inner, k)?;
        unsafe { store(out, CtxGraph { inner }) }
    })
}

/// # Safety
/// `path` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_graph_read(path: *const c_char, out: *mut *mut CtxGraph) -> CtxStatus {
    guard(|| {
        let path = unsafe { path_arg(path, "path") }?;
        let inner = read_graph(path)?;
        unsafe { store(out, CtxGraph { inner }) }
    })
}

/// # Safety
/// `g` must be null or a live handle; `path` must be null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ctx_graph_write(g: *const CtxGraph, path: *const c_char) -> CtxStatus {
    guard(|| {
        let g = unsafe { handle(g, "graph") }?;
        let path = unsafe { path_arg(path, "path") }?;
        Ok(write_graph(&g.inner, path)?)
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_graph_node_count(g: *const CtxGraph) -> usize {
    unsafe { g.as_ref() }.map_or(0, |g| g.inner.node_count())
}

/// Number of stored directed entries, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_graph_nnz(g: *const CtxGraph) -> usize {
    unsafe { g.as_ref() }.map_or(0, |g| g.inner.nnz())
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ctx_graph_free(g: *mut CtxGraph) {
    unsafe { release(g) }
}

/// Propagate `y` over the graph with retention `mu` by fixed-point iteration.
/// Writes `len` values to `out`. Returns `CTX_STATUS_NOT_CONVERGED` when
/// `max_iter` is reached; `out` then holds the last iterate.
///
/// # Safety
/// `y` and `out` must point to `len` doubles; `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_propagate(
    g: *const CtxGraph,
    y: *const f64,
    len: usize,
    mu: f64,
    tol: f64,
    max_iter: usize,
    out: *mut f64,
) -> CtxStatus {
    guard(|| {
        let g = unsafe { handle(g, "graph") }?;
        if y.is_null() {
            return Err(Failure::null("y"));
        }
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let y = unsafe { std::slice::from_raw_parts(y, len) };
        let cfg = PropagationConfig { mu, tol, max_iter, solver: Solver::Iterative, ..PropagationConfig::default() };
        let h = propagate_labels(&g.inner, y, &cfg)?;
        unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(&h.values);
        if !h.converged {
            return Err(Failure::new(
                CtxStatus::NotConverged,
                format!("propagation did not converge within {} iterations", h.iterations),
            ));
        }
        Ok(())
    })
}

/// Write the synthetic video fixture to `dir`.
///
/// # Safety
/// `dir` must be null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ctx_synth_write(dir: *const c_char, seed: u64) -> CtxStatus {
    guard(|| {
        let dir = unsafe { path_arg(dir, "dir") }?;
        let fx = synth::generate(&SynthConfig { seed, ..SynthConfig::default() })?;
        synth::write_fixture(&fx, dir)?;
        Ok(())
    })
}

/// Run the full pipeline on `inputs`, writing artifacts to `out_dir`.
///
/// # Safety
/// `cfg` must be null or a live handle; the paths must be null or
/// NUL-terminated strings; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_pipeline_run(
    cfg: *const CtxConfig,
    inputs: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut CtxOutcome,
) -> CtxStatus {
    guard(|| {
        let cfg = unsafe { handle(cfg, "cfg") }?;
        let inputs = unsafe { path_arg(inputs, "inputs") }?;
        let out_dir = unsafe { path_arg(out_dir, "out_dir") }?;
        let inner = run_pipeline(&cfg.inner, &inputs, &out_dir)?;
        unsafe { store(out, CtxOutcome { inner }) }
    })
}

/// Average IoU against ground truth. Fails with `CTX_STATUS_VALIDATION` when
/// the inputs had no ground truth.
///
/// # Safety
/// `o` must be null or a live handle; `iou` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_outcome_average_iou(o: *const CtxOutcome, iou: *mut f64) -> CtxStatus {
    guard(|| {
        let o = unsafe { handle(o, "outcome") }?;
        let iou = unsafe { handle_mut(iou, "iou") }?;
        let report = o
            .inner
            .report
            .as_ref()
            .ok_or_else(|| Failure::new(CtxStatus::Validation, "no ground truth was evaluated"))?;
        *iou = report.average_iou;
        Ok(())
    })
}

/// Final CRF energy, or NaN for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_outcome_energy(o: *const CtxOutcome) -> f64 {
    unsafe { o.as_ref() }.map_or(f64::NAN, |o| o.inner.segmentation.result.energy)
}

/// Number of superpixels labeled, or 0 for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_outcome_num_superpixels(o: *const CtxOutcome) -> usize {
    unsafe { o.as_ref() }.map_or(0, |o| o.inner.segmentation.result.labeling.len())
}

/// Copy the per-superpixel labels into `labels`, which holds `len` entries.
///
/// # Safety
/// `o` must be null or a live handle; `labels` must point to `len` writable entries.
#[no_mangle]
pub unsafe extern "C" fn ctx_outcome_labels(o: *const CtxOutcome, labels: *mut u32, len: usize) -> CtxStatus {
    guard(|| {
        let o = unsafe { handle(o, "outcome") }?;
        if labels.is_null() {
            return Err(Failure::null("labels"));
        }
        let src = &o.inner.segmentation.result.labeling;
        if len != src.len() {
            return Err(Failure::new(
                CtxStatus::Validation,
                format!("buffer holds {len} labels but there are {}", src.len()),
            ));
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(labels, len) };
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = s as u32;
        }
        Ok(())
    })
}

/// Whether every propagation and the CRF inference converged; false for a
/// null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_outcome_converged(o: *const CtxOutcome) -> bool {
    unsafe { o.as_ref() }
        .is_some_and(|o| o.inner.propagation.converged() && o.inner.segmentation.result.converged)
}

/// # Safety
/// `o` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ctx_outcome_free(o: *mut CtxOutcome) {
    unsafe { release(o) }
}
