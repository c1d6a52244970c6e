//! C ABI over `rlfdc`.
//!
//! Datasets and models are opaque handles created by `*_load` / `*_from_json`
//! and released with the matching `*_free`. Every fallible call returns an
//! [`RlfdcStatus`]; on failure the message is kept per thread and can be read
//! with [`rlfdc_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use rlfdc::coverage::{ScopePolicy, SuiteContext};
use rlfdc::harness::select;
use rlfdc::metrics::{make_scorer, ScorerKind, ScorerSpec};
use rlfdc::rl::trainer::episode_setup;
use rlfdc::{load_dataset, Dataset, Error, QModel, TrainConfig};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlfdcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidInput = 5,
    Model = 6,
    Panic = 7,
}

/// A loaded dataset.
pub struct RlfdcDataset(Dataset);

/// A trained model. Safe to use from several threads at once.
pub struct RlfdcModel(Arc<QModel>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> RlfdcStatus {
    match e {
        Error::Io(_) => RlfdcStatus::Io,
        Error::Json(_) | Error::Malformed(_) | Error::Version { .. } => RlfdcStatus::Parse,
        Error::Model(_) | Error::Diverged(_) => RlfdcStatus::Model,
        _ => RlfdcStatus::InvalidInput,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (RlfdcStatus, String)>) -> RlfdcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RlfdcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RlfdcStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (RlfdcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RlfdcStatus, String) {
    (RlfdcStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RlfdcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RlfdcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(
    p: *const T,
    len: usize,
    what: &str,
) -> Result<&'a [T], (RlfdcStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rlfdc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated, truncated if needed). Returns the full message length
/// without the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Loads a dataset document from `path`.
///
/// # Safety
/// `path` must be a valid C string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_dataset_load(
    path: *const c_char,
    out: *mut *mut RlfdcDataset,
) -> RlfdcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let bytes = std::fs::read(Path::new(path)).map_err(|e| lib_err(e.into()))?;
        let d = load_dataset(&bytes).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(RlfdcDataset(d)));
        Ok(())
    })
}

/// Parses a dataset document held in memory.
///
/// # Safety
/// `json` must be a valid C string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_dataset_from_json(
    json: *const c_char,
    out: *mut *mut RlfdcDataset,
) -> RlfdcStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = load_dataset(json.as_bytes()).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(RlfdcDataset(d)));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_dataset_free(dataset: *mut RlfdcDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// # Safety
/// `dataset` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_dataset_num_tests(dataset: *const RlfdcDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.num_tests())
}

/// # Safety
/// `dataset` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_dataset_num_methods(dataset: *const RlfdcDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.num_methods())
}

/// # Safety
/// `dataset` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_dataset_num_elements(dataset: *const RlfdcDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.num_elements())
}

/// Loads a model document from `path`.
///
/// # Safety
/// `path` must be a valid C string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_model_load(
    path: *const c_char,
    out: *mut *mut RlfdcModel,
) -> RlfdcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = QModel::load(path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(RlfdcModel(Arc::new(m))));
        Ok(())
    })
}

/// Saves a model document to `path`.
///
/// # Safety
/// `model` must be a valid handle and `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_model_save(
    model: *const RlfdcModel,
    path: *const c_char,
) -> RlfdcStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let path = str_arg(path, "path")?;
        model.0.save(path).map_err(lib_err)
    })
}

/// Trains a model with default hyperparameters on `count` datasets.
///
/// # Safety
/// `datasets` must point to `count` valid handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_model_train(
    datasets: *const *const RlfdcDataset,
    count: usize,
    epochs: usize,
    seed: u64,
    out: *mut *mut RlfdcModel,
) -> RlfdcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let handles = slice_arg(datasets, count, "datasets")?;
        let mut owned = Vec::with_capacity(count);
        for &h in handles {
            owned.push(h.as_ref().ok_or_else(|| null("dataset handle"))?.0.clone());
        }
        let config = TrainConfig {
            epochs,
            seed,
            ..Default::default()
        };
        let m = rlfdc::rl::train(&owned, &config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(RlfdcModel(Arc::new(m))));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_model_free(model: *mut RlfdcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predicted FDC of `candidate` for the suite made of the dataset's initial
/// failing test plus the `selected` tests.
///
/// # Safety
/// Handles must be valid; `selected` must point to `selected_len` ids;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_predict_fdc(
    model: *const RlfdcModel,
    dataset: *const RlfdcDataset,
    selected: *const usize,
    selected_len: usize,
    candidate: usize,
    out: *mut f64,
) -> RlfdcStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let d = &dataset.as_ref().ok_or_else(|| null("dataset"))?.0;
        let selected = slice_arg(selected, selected_len, "selected")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (root, _) = episode_setup(d).map_err(lib_err)?;
        let ctx = SuiteContext::with_selected(d, root, ScopePolicy::FailingCovered, selected)
            .map_err(lib_err)?;
        *out = model.0.predict_fdc(&ctx, candidate).map_err(lib_err)?;
        Ok(())
    })
}

/// Greedy selection of `k` tests under `metric` (`"rlfdc"`, `"tfd"`, ...).
/// `model` is required for `"rlfdc"` and ignored otherwise; `alpha` is used
/// by metrics that take one and ignored otherwise; `seed` drives
/// `"random"`. Writes the selected ids to `out_selected` and the best buggy
/// rank after each step (`k + 1` values, step 0 first) to `out_ranks`.
///
/// # Safety
/// Handles must be valid or null as described; `metric` must be a valid C
/// string; `out_selected` must have room for `k` values and `out_ranks`
/// for `k + 1`.
#[no_mangle]
pub unsafe extern "C" fn rlfdc_select(
    dataset: *const RlfdcDataset,
    metric: *const c_char,
    model: *const RlfdcModel,
    alpha: f64,
    seed: u64,
    k: usize,
    out_selected: *mut usize,
    out_ranks: *mut usize,
) -> RlfdcStatus {
    guard(|| {
        let d = &dataset.as_ref().ok_or_else(|| null("dataset"))?.0;
        let kind: ScorerKind = str_arg(metric, "metric")?.parse().map_err(lib_err)?;
        if (k > 0 && out_selected.is_null()) || out_ranks.is_null() {
            return Err(null("output buffer"));
        }
        let mut spec = ScorerSpec::new(kind);
        if kind.takes_alpha() {
            spec = spec.with_alpha(alpha);
        }
        if kind == ScorerKind::Random {
            spec = spec.with_seed(seed);
        }
        if kind == ScorerKind::Rlfdc {
            let m = model.as_ref().ok_or_else(|| null("model"))?;
            spec = spec.with_model(Arc::clone(&m.0));
        }
        let mut scorer = make_scorer(&spec).map_err(lib_err)?;
        let (root, _) = episode_setup(d).map_err(lib_err)?;
        let trace =
            select(d, root, scorer.as_mut(), k, ScopePolicy::FailingCovered).map_err(lib_err)?;
        for (i, t) in trace.selected().into_iter().enumerate() {
            *out_selected.add(i) = t;
        }
        for (i, s) in trace.steps.iter().enumerate() {
            *out_ranks.add(i) = s.best_rank;
        }
        Ok(())
    })
}
