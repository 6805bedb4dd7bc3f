//! C interface to `closedenv`.
//!
//! Datasets and sanitizers cross the boundary as opaque handles released
//! with their `_free` function. Every fallible call returns a [`CeStatus`];
//! on failure the message is available from [`ce_last_error`] on the same
//! thread. Strings returned through out-parameters are released with
//! [`ce_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use closedenv::certify::{ClosedEnvironment, EnvironmentConfig, SanitizerConfig};
use closedenv::data::{generate_synthetic, load_dataset, save_dataset, SyntheticConfig};
use closedenv::metrics::{privacy_term, roc_auc_scores};
use closedenv::predictors::cosine_score;
use closedenv::{Error, FeatureRecord, LabeledDataset, Role, Sanitizer};

/// Result codes. Values 2 to 5 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CeStatus {
    Ok = 0,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 1,
    Config = 2,
    Io = 3,
    Divergence = 4,
    Metric = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CeRole {
    Train = 0,
    Test = 1,
    User = 2,
}

impl From<CeRole> for Role {
    fn from(r: CeRole) -> Self {
        match r {
            CeRole::Train => Role::Train,
            CeRole::Test => Role::Test,
            CeRole::User => Role::User,
        }
    }
}

/// Opaque labeled dataset.
pub struct CeDataset {
    inner: LabeledDataset,
}

/// Opaque fitted sanitizer.
pub struct CeSanitizer {
    inner: Sanitizer,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CeStatus {
    match closedenv::cli::exit_code(err) {
        2 => CeStatus::Config,
        3 => CeStatus::Io,
        4 => CeStatus::Divergence,
        5 => CeStatus::Metric,
        _ => CeStatus::Internal,
    }
}

enum Failure {
    Arg(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CeStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CeStatus::Ok,
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            CeStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            CeStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Arg(format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Arg(format!("`{name}` is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::Arg(format!("`{name}` is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Arg(format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::Arg(format!("`{name}` is null")))
}

fn json_or_default<T: serde::de::DeserializeOwned + Default>(
    text: Option<&str>,
) -> Result<T, Failure> {
    match text {
        None => Ok(T::default()),
        Some(t) => serde_json::from_str(t).map_err(|e| Failure::Lib(Error::Json(e))),
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Arg("output contains a NUL byte".into()))
}

fn into_handle(ds: LabeledDataset) -> *mut CeDataset {
    Box::into_raw(Box::new(CeDataset { inner: ds }))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ce_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ce_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ce_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Reads a CSV dataset (`feature_0..feature_{d-1}[,t,s]`).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ce_dataset_load_csv(
    path: *const c_char,
    role: CeRole,
    out: *mut *mut CeDataset,
) -> CeStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        *out = into_handle(load_dataset(path, role.into())?);
        Ok(())
    })
}

/// Writes a dataset as CSV.
///
/// # Safety
/// `ds` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ce_dataset_save_csv(
    ds: *const CeDataset,
    path: *const c_char,
) -> CeStatus {
    guard(|| {
        let ds = ref_arg(ds, "ds")?;
        save_dataset(&ds.inner, str_arg(path, "path")?)?;
        Ok(())
    })
}

/// Builds a dataset from a row-major `rows x dim` feature array. `t` and
/// `s` may both be null (unlabeled user data) or both point to `rows`
/// labels; `s` entries must be +1 or -1.
///
/// # Safety
/// Non-null pointers must reference arrays of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn ce_dataset_from_arrays(
    features: *const f64,
    rows: usize,
    dim: usize,
    t: *const i64,
    s: *const i8,
    role: CeRole,
    out: *mut *mut CeDataset,
) -> CeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let total = rows
            .checked_mul(dim)
            .ok_or_else(|| Failure::Arg("rows * dim overflows".into()))?;
        let x = slice_arg(features, total, "features")?;
        let records = match (t.is_null(), s.is_null()) {
            (true, true) => x
                .chunks_exact(dim.max(1))
                .map(|r| FeatureRecord::unlabeled(r.to_vec()))
                .collect(),
            (false, false) => {
                let t = slice_arg(t, rows, "t")?;
                let s = slice_arg(s, rows, "s")?;
                x.chunks_exact(dim.max(1))
                    .zip(t.iter().zip(s))
                    .map(|(r, (&t, &s))| FeatureRecord::labeled(r.to_vec(), t, s))
                    .collect()
            }
            _ => {
                return Err(Failure::Arg(
                    "`t` and `s` must both be set or both be null".into(),
                ))
            }
        };
        *out = into_handle(LabeledDataset::new(records, role.into())?);
        Ok(())
    })
}

/// Number of records, 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ce_dataset_len(ds: *const CeDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.len())
}

/// Feature dimension, 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ce_dataset_dim(ds: *const CeDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.dim())
}

/// Copies record `index`'s features into `out` (`dim` values).
///
/// # Safety
/// `out` must have room for `ce_dataset_dim(ds)` values.
#[no_mangle]
pub unsafe extern "C" fn ce_dataset_features(
    ds: *const CeDataset,
    index: usize,
    out: *mut f64,
) -> CeStatus {
    guard(|| {
        let ds = ref_arg(ds, "ds")?;
        if index >= ds.inner.len() {
            return Err(Failure::Arg(format!("record {index} is out of range")));
        }
        if out.is_null() {
            return Err(Failure::Arg("`out` is null".into()));
        }
        let src = ds.inner.features(index);
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ce_dataset_free(ds: *mut CeDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Generates the synthetic train, test and user sets. `config_json` may be
/// null for defaults.
///
/// # Safety
/// The out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ce_generate_synthetic(
    config_json: *const c_char,
    train: *mut *mut CeDataset,
    test: *mut *mut CeDataset,
    user: *mut *mut CeDataset,
) -> CeStatus {
    guard(|| {
        let cfg: SyntheticConfig = json_or_default(opt_str_arg(config_json, "config_json")?)?;
        let (train_out, test_out, user_out) = (
            out_arg(train, "train")?,
            out_arg(test, "test")?,
            out_arg(user, "user")?,
        );
        let (a, b, c) = generate_synthetic(&cfg)?;
        *train_out = into_handle(a);
        *test_out = into_handle(b);
        *user_out = into_handle(c);
        Ok(())
    })
}

unsafe fn environment(
    train: *const CeDataset,
    test: *const CeDataset,
    env_json: *const c_char,
) -> Result<ClosedEnvironment, Failure> {
    let cfg: EnvironmentConfig = json_or_default(opt_str_arg(env_json, "env_json")?)?;
    let train = ref_arg(train, "train")?.inner.clone();
    let test = ref_arg(test, "test")?.inner.clone();
    Ok(ClosedEnvironment::new(train, test, cfg)?)
}

/// Fits a sanitizer. `env_json` holds environment settings and
/// `sanitizer_json` the method and its parameters; null means defaults.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ce_sanitizer_fit(
    train: *const CeDataset,
    test: *const CeDataset,
    env_json: *const c_char,
    sanitizer_json: *const c_char,
    out: *mut *mut CeSanitizer,
) -> CeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let env = environment(train, test, env_json)?;
        let cfg: SanitizerConfig = json_or_default(opt_str_arg(sanitizer_json, "sanitizer_json")?)?;
        let san = env.fit_sanitizer(&cfg)?;
        *out = Box::into_raw(Box::new(CeSanitizer { inner: san }));
        Ok(())
    })
}

/// Loads a saved sanitizer. MMD sanitizers need the training set they were
/// fitted on; `train` may be null otherwise.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ce_sanitizer_from_json(
    json: *const c_char,
    train: *const CeDataset,
    out: *mut *mut CeSanitizer,
) -> CeStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let san = Sanitizer::from_json(text, train.as_ref().map(|t| &t.inner))?;
        *out = Box::into_raw(Box::new(CeSanitizer { inner: san }));
        Ok(())
    })
}

/// Serializes a sanitizer; release the string with [`ce_string_free`].
///
/// # Safety
/// `san` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ce_sanitizer_to_json(
    san: *const CeSanitizer,
    out: *mut *mut c_char,
) -> CeStatus {
    guard(|| {
        let san = ref_arg(san, "san")?;
        let out = out_arg(out, "out")?;
        *out = into_c_string(san.inner.to_json()?)?;
        Ok(())
    })
}

/// Applies `f` to one feature vector of length `dim`.
///
/// # Safety
/// `x` and `out` must hold `dim` values.
#[no_mangle]
pub unsafe extern "C" fn ce_sanitizer_apply(
    san: *const CeSanitizer,
    x: *const f64,
    dim: usize,
    sample_seed: u64,
    out: *mut f64,
) -> CeStatus {
    guard(|| {
        let san = ref_arg(san, "san")?;
        let x = slice_arg(x, dim, "x")?;
        if out.is_null() {
            return Err(Failure::Arg("`out` is null".into()));
        }
        let y = san.inner.apply(x, sample_seed)?;
        ptr::copy_nonoverlapping(y.as_ptr(), out, y.len());
        Ok(())
    })
}

/// Sanitizes every record of `ds` into a new dataset.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ce_sanitizer_apply_dataset(
    san: *const CeSanitizer,
    ds: *const CeDataset,
    out: *mut *mut CeDataset,
) -> CeStatus {
    guard(|| {
        let san = ref_arg(san, "san")?;
        let ds = ref_arg(ds, "ds")?;
        let out = out_arg(out, "out")?;
        *out = into_handle(san.inner.sanitize_dataset(&ds.inner)?);
        Ok(())
    })
}

/// # Safety
/// `san` must be null or a handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ce_sanitizer_free(san: *mut CeSanitizer) {
    if !san.is_null() {
        drop(Box::from_raw(san));
    }
}

/// Trains the environment, applies `san` (identity when null) and writes
/// the JSON report to `out`. `user` may be null.
///
/// # Safety
/// Non-null handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ce_certify(
    train: *const CeDataset,
    test: *const CeDataset,
    user: *const CeDataset,
    san: *const CeSanitizer,
    env_json: *const c_char,
    out: *mut *mut c_char,
) -> CeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let env = environment(train, test, env_json)?;
        let identity = Sanitizer::Identity {
            dim: env.train.dim(),
        };
        let san = san.as_ref().map_or(&identity, |s| &s.inner);
        let report = env.certify(san, user.as_ref().map(|u| &u.inner))?;
        *out = into_c_string(report.to_json()?)?;
        Ok(())
    })
}

/// Cosine similarity of two vectors of length `dim`.
///
/// # Safety
/// `a` and `b` must hold `dim` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ce_cosine_score(
    a: *const f64,
    b: *const f64,
    dim: usize,
    out: *mut f64,
) -> CeStatus {
    guard(|| {
        let (a, b) = (slice_arg(a, dim, "a")?, slice_arg(b, dim, "b")?);
        *out_arg(out, "out")? = cosine_score(a, b)?;
        Ok(())
    })
}

/// ROC AUC of positive against negative scores, ties counted half.
///
/// # Safety
/// The arrays must hold the stated counts and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ce_roc_auc(
    positive: *const f64,
    positive_len: usize,
    negative: *const f64,
    negative_len: usize,
    out: *mut f64,
) -> CeStatus {
    guard(|| {
        let p = slice_arg(positive, positive_len, "positive")?;
        let n = slice_arg(negative, negative_len, "negative")?;
        *out_arg(out, "out")? = roc_auc_scores(p, n)?;
        Ok(())
    })
}

/// `1 - 2 |accuracy - 0.5|`.
#[no_mangle]
pub extern "C" fn ce_privacy_term(sensitive_accuracy: f64) -> f64 {
    privacy_term(sensitive_accuracy)
}
