//! C ABI over the `sptcl` solver.
//!
//! Datasets and fitted models cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Every fallible call
//! returns an [`SptclStatus`]; on failure a human-readable message can be
//! read with [`sptcl_last_error_message`] on the same thread.
//!
//! Matrices are passed sample-major: `n` rows of `dim` contiguous doubles.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use libc::{c_char, size_t};
use nalgebra::DMatrix;
use sptcl::datamodel::io::{load_features, load_labels};
use sptcl::datamodel::{inject_label_noise, Format};
use sptcl::error::{DataError, SolverError};
use sptcl::{
    Ablation, Dataset, Error, Gamma, Hyperparams, IterationRecord, KernelSpec, Model, NoiseSpec,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SptclStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Malformed or inconsistent input data.
    InvalidData = 3,
    Io = 4,
    /// The solver hit a singular system or non-finite value.
    Numerical = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SptclKernel {
    /// Primal solver on raw features.
    None = 0,
    Linear = 1,
    Rbf = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SptclAblation {
    Full = 0,
    NoSpl = 1,
    HardLabel = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SptclHyperparams {
    pub r: f64,
    pub eta: f64,
    pub rho: f64,
    pub k_neighbors: size_t,
    pub kernel: SptclKernel,
    /// RBF bandwidth; any value `<= 0` selects the median heuristic.
    pub gamma: f64,
    pub outer_iters: size_t,
    pub inner_iters: size_t,
    pub inner_tol: f64,
    pub q_floor: f64,
    pub seed: u64,
    pub ablation: SptclAblation,
}

impl From<&SptclHyperparams> for Hyperparams {
    fn from(h: &SptclHyperparams) -> Self {
        let kernel = match h.kernel {
            SptclKernel::None => KernelSpec::None,
            SptclKernel::Linear => KernelSpec::Linear,
            SptclKernel::Rbf if h.gamma > 0.0 => KernelSpec::Rbf(Gamma::Fixed(h.gamma)),
            SptclKernel::Rbf => KernelSpec::Rbf(Gamma::Median),
        };
        let ablation = match h.ablation {
            SptclAblation::Full => Ablation::Full,
            SptclAblation::NoSpl => Ablation::NoSpl,
            SptclAblation::HardLabel => Ablation::HardLabel,
        };
        Hyperparams {
            r: h.r,
            eta: h.eta,
            rho: h.rho,
            k_neighbors: h.k_neighbors,
            kernel,
            outer_iters: h.outer_iters,
            inner_iters: h.inner_iters,
            inner_tol: h.inner_tol,
            q_floor: h.q_floor,
            seed: h.seed,
            ablation,
        }
    }
}

/// Opaque feature matrix with optional labels.
pub struct SptclDataset {
    inner: Dataset,
}

/// Opaque fitted model, plus the diagnostics of the run that produced it.
pub struct SptclModel {
    model: Model,
    target_predictions: Vec<usize>,
    records: Vec<IterationRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SptclStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Data(DataError::Io { .. }) => SptclStatus::Io,
            Error::Data(DataError::InvalidParameter(_)) => SptclStatus::InvalidArgument,
            Error::Solver(
                SolverError::NotPositiveDefinite
                | SolverError::Singular
                | SolverError::NonFinite(_),
            ) => SptclStatus::Numerical,
            _ => SptclStatus::InvalidData,
        };
        Failure(status, e.to_string())
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Error::from(e).into()
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SptclStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(SptclStatus::NullPointer, format!("{what} is null"))
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> SptclStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SptclStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            SptclStatus::Panic
        }
    }
}

unsafe fn matrix_from_raw(
    data: *const f64,
    n: size_t,
    dim: size_t,
) -> Result<DMatrix<f64>, Failure> {
    if data.is_null() {
        return Err(null("features"));
    }
    let len = n
        .checked_mul(dim)
        .ok_or_else(|| invalid("n * dim overflows"))?;
    // SAFETY: caller guarantees `n * dim` readable doubles.
    let slice = unsafe { std::slice::from_raw_parts(data, len) };
    // sample-major rows become columns of the `dim x n` feature matrix
    Ok(DMatrix::from_column_slice(dim, n, slice))
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees a nul-terminated string.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))?;
    Ok(Path::new(s))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: caller guarantees a valid, writable pointer when non-null.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

fn label_vec(labels: &[i64], class_count: size_t) -> Result<(Vec<Option<usize>>, usize), Failure> {
    let mut out = Vec::with_capacity(labels.len());
    for (i, &l) in labels.iter().enumerate() {
        match l {
            -1 => out.push(None),
            l if l >= 0 => out.push(Some(l as usize)),
            l => {
                return Err(invalid(format!(
                    "label {l} at index {i} is negative and not -1"
                )))
            }
        }
    }
    let c = if class_count > 0 {
        class_count
    } else {
        out.iter().flatten().max().map_or(0, |m| m + 1)
    };
    Ok((out, c))
}

/// The library defaults.
#[no_mangle]
pub extern "C" fn sptcl_hyperparams_default() -> SptclHyperparams {
    let d = Hyperparams::default();
    SptclHyperparams {
        r: d.r,
        eta: d.eta,
        rho: d.rho,
        k_neighbors: d.k_neighbors,
        kernel: SptclKernel::None,
        gamma: 0.0,
        outer_iters: d.outer_iters,
        inner_iters: d.inner_iters,
        inner_tol: d.inner_tol,
        q_floor: d.q_floor,
        seed: d.seed,
        ablation: SptclAblation::Full,
    }
}

/// Message for the last failed call on this thread, or null after a
/// successful call. The pointer stays valid until the next call into the
/// library on this thread.
#[no_mangle]
pub extern "C" fn sptcl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Build a dataset from `n` samples of `dim` features. `labels` may be null;
/// otherwise it holds `n` entries where `-1` marks an unlabeled sample.
/// `class_count == 0` infers the count as the largest label plus one.
///
/// # Safety
/// `features` must point to `n * dim` doubles, `labels` (if non-null) to `n`
/// integers, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sptcl_dataset_new(
    features: *const f64,
    n: size_t,
    dim: size_t,
    labels: *const i64,
    class_count: size_t,
    out: *mut *mut SptclDataset,
) -> SptclStatus {
    guard(|| {
        let out = unsafe { out_ptr(out, "out") }?;
        let x = unsafe { matrix_from_raw(features, n, dim) }?;
        let mut ds = Dataset::new(x)?;
        if !labels.is_null() {
            // SAFETY: caller guarantees `n` readable labels.
            let raw = unsafe { std::slice::from_raw_parts(labels, n) };
            let (labels, c) = label_vec(raw, class_count)?;
            ds = ds.with_labels(labels, c)?;
        }
        *out = Box::into_raw(Box::new(SptclDataset { inner: ds }));
        Ok(())
    })
}

/// Load features (CSV or binary, detected from content) and, if
/// `labels_path` is non-null, labels from a second file.
///
/// # Safety
/// Paths must be nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sptcl_dataset_load(
    features_path: *const c_char,
    labels_path: *const c_char,
    class_count: size_t,
    out: *mut *mut SptclDataset,
) -> SptclStatus {
    guard(|| {
        let out = unsafe { out_ptr(out, "out") }?;
        let fp = unsafe { path_arg(features_path, "features_path") }?;
        let mut ds = load_features(fp, Format::detect(fp)?)?;
        if !labels_path.is_null() {
            let lp = unsafe { path_arg(labels_path, "labels_path") }?;
            let labels = load_labels(lp, Format::detect(lp)?)?;
            let c = if class_count > 0 {
                class_count
            } else {
                labels.iter().flatten().max().map_or(0, |m| m + 1)
            };
            ds = ds.with_labels(labels, c)?;
        }
        *out = Box::into_raw(Box::new(SptclDataset { inner: ds }));
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn sptcl_dataset_len(ds: *const SptclDataset) -> size_t {
    unsafe { ds.as_ref() }.map_or(0, |d| d.inner.len())
}

/// Feature dimension, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn sptcl_dataset_dim(ds: *const SptclDataset) -> size_t {
    unsafe { ds.as_ref() }.map_or(0, |d| d.inner.dim())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sptcl_dataset_free(ds: *mut SptclDataset) {
    if !ds.is_null() {
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Fit on a fully labeled `source` and a `target` whose labels, if present,
/// are used only for the per-iteration accuracy diagnostics.
///
/// # Safety
/// Handles must be live; `hp` must be null (defaults) or readable; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sptcl_fit(
    source: *const SptclDataset,
    target: *const SptclDataset,
    hp: *const SptclHyperparams,
    out: *mut *mut SptclModel,
) -> SptclStatus {
    guard(|| {
        let out = unsafe { out_ptr(out, "out") }?;
        let source = unsafe { source.as_ref() }.ok_or_else(|| null("source"))?;
        let target = unsafe { target.as_ref() }.ok_or_else(|| null("target"))?;
        let hp = match unsafe { hp.as_ref() } {
            Some(h) => Hyperparams::from(h),
            None => Hyperparams::default(),
        };
        let result = sptcl::fit(&source.inner, &target.inner, &hp)?;
        *out = Box::into_raw(Box::new(SptclModel {
            model: result.model,
            target_predictions: result.target_predictions,
            records: result.records,
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn sptcl_model_class_count(model: *const SptclModel) -> size_t {
    unsafe { model.as_ref() }.map_or(0, |m| m.model.class_count)
}

/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn sptcl_model_target_count(model: *const SptclModel) -> size_t {
    unsafe { model.as_ref() }.map_or(0, |m| m.target_predictions.len())
}

/// Copy the predicted target labels into `out`, which must have room for
/// `len` entries with `len == sptcl_model_target_count(model)`.
///
/// # Safety
/// `model` must be live and `out` must hold `len` writable entries.
#[no_mangle]
pub unsafe extern "C" fn sptcl_model_target_predictions(
    model: *const SptclModel,
    out: *mut size_t,
    len: size_t,
) -> SptclStatus {
    guard(|| {
        let model = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let preds = &model.target_predictions;
        if len != preds.len() {
            return Err(invalid(format!(
                "buffer holds {len} entries, need {}",
                preds.len()
            )));
        }
        // SAFETY: `out` holds `len` entries.
        unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(preds);
        Ok(())
    })
}

/// Predict `n` new samples. `labels_out` receives `n` labels; `probs_out`,
/// if non-null, receives `n * class_count` probabilities, sample-major.
///
/// # Safety
/// `features` must hold `n * dim` doubles; output buffers must be sized as
/// described.
#[no_mangle]
pub unsafe extern "C" fn sptcl_model_predict(
    model: *const SptclModel,
    features: *const f64,
    n: size_t,
    dim: size_t,
    labels_out: *mut size_t,
    probs_out: *mut f64,
) -> SptclStatus {
    guard(|| {
        let model = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        if labels_out.is_null() {
            return Err(null("labels_out"));
        }
        let x = unsafe { matrix_from_raw(features, n, dim) }?;
        let pred = model.model.predict(&x)?;
        // SAFETY: buffers sized by the caller as documented.
        unsafe { std::slice::from_raw_parts_mut(labels_out, n) }.copy_from_slice(&pred.labels);
        if !probs_out.is_null() {
            let c = model.model.class_count;
            let probs = unsafe { std::slice::from_raw_parts_mut(probs_out, n * c) };
            // column-major `C x n` storage is already sample-major
            probs.copy_from_slice(pred.probabilities.as_slice());
        }
        Ok(())
    })
}

fn emit_string(s: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let out = unsafe { out_ptr(out, "out") }?;
    *out = CString::new(s)
        .map_err(|_| invalid("string has an interior nul"))?
        .into_raw();
    Ok(())
}

/// Per-iteration diagnostics as JSON lines. Free with [`sptcl_string_free`].
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sptcl_model_records_json(
    model: *const SptclModel,
    out: *mut *mut c_char,
) -> SptclStatus {
    guard(|| {
        let model = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        let mut buf = Vec::new();
        sptcl::eval::write_jsonl(&model.records, &mut buf).expect("write to Vec");
        emit_string(String::from_utf8(buf).expect("JSON is UTF-8"), out)
    })
}

/// Serialize the model as JSON, the same format the CLI writes.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sptcl_model_to_json(
    model: *const SptclModel,
    out: *mut *mut c_char,
) -> SptclStatus {
    guard(|| {
        let model = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        emit_string(
            serde_json::to_string(&model.model).expect("model serializes"),
            out,
        )
    })
}

/// Load a model from JSON. The resulting handle carries no run diagnostics.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sptcl_model_from_json(
    json: *const c_char,
    out: *mut *mut SptclModel,
) -> SptclStatus {
    guard(|| {
        let out = unsafe { out_ptr(out, "out") }?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|_| invalid("json is not UTF-8"))?;
        let model: Model = serde_json::from_str(text)
            .map_err(|e| Failure(SptclStatus::InvalidData, format!("invalid model: {e}")))?;
        *out = Box::into_raw(Box::new(SptclModel {
            model,
            target_predictions: Vec::new(),
            records: Vec::new(),
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sptcl_model_free(model: *mut SptclModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sptcl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Flip each of `n` labels with probability `p_noise` to a uniformly chosen
/// other class. `mask_out`, if non-null, receives 1 for flipped entries.
///
/// # Safety
/// `labels` must hold `n` readable entries and `labels_out` `n` writable
/// entries; `mask_out` must be null or hold `n` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sptcl_inject_label_noise(
    labels: *const size_t,
    n: size_t,
    class_count: size_t,
    p_noise: f64,
    seed: u64,
    labels_out: *mut size_t,
    mask_out: *mut u8,
) -> SptclStatus {
    guard(|| {
        if labels.is_null() {
            return Err(null("labels"));
        }
        if labels_out.is_null() {
            return Err(null("labels_out"));
        }
        let y = unsafe { std::slice::from_raw_parts(labels, n) };
        let (noisy, mask) = inject_label_noise(y, class_count, &NoiseSpec::new(p_noise, seed))?;
        unsafe { std::slice::from_raw_parts_mut(labels_out, n) }.copy_from_slice(&noisy);
        if !mask_out.is_null() {
            let m = unsafe { std::slice::from_raw_parts_mut(mask_out, n) };
            for (dst, &f) in m.iter_mut().zip(&mask) {
                *dst = f as u8;
            }
        }
        Ok(())
    })
}
