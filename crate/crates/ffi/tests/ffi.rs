use std::ffi::{CStr, CString};
use std::ptr;

use closedenv_ffi::*;

const DATA: &str = r#"{"d": 8, "m": 160, "m_prime": 80, "n": 60, "identity_count": 24, "seed": 3}"#;
const ENV: &str = r#"{"grid": {"rf_tree_counts": [5], "rf_depths": [3]}, "master_seed": 2}"#;

struct Sets {
    train: *mut CeDataset,
    test: *mut CeDataset,
    user: *mut CeDataset,
}

impl Drop for Sets {
    fn drop(&mut self) {
        unsafe {
            ce_dataset_free(self.train);
            ce_dataset_free(self.test);
            ce_dataset_free(self.user);
        }
    }
}

fn sets() -> Sets {
    let cfg = CString::new(DATA).unwrap();
    let mut s = Sets {
        train: ptr::null_mut(),
        test: ptr::null_mut(),
        user: ptr::null_mut(),
    };
    let st = unsafe { ce_generate_synthetic(cfg.as_ptr(), &mut s.train, &mut s.test, &mut s.user) };
    assert_eq!(st, CeStatus::Ok);
    s
}

fn last_error() -> String {
    let p = ce_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    ce_string_free(p);
    s
}

#[test]
fn generated_sets_have_configured_shape() {
    let s = sets();
    unsafe {
        assert_eq!(ce_dataset_len(s.train), 160);
        assert_eq!(ce_dataset_len(s.test), 80);
        assert_eq!(ce_dataset_len(s.user), 60);
        assert_eq!(ce_dataset_dim(s.train), 8);
        assert_eq!(ce_dataset_dim(ptr::null()), 0);
    }
}

#[test]
fn linear_fit_apply_and_reload() {
    let s = sets();
    let env = CString::new(ENV).unwrap();
    let method = CString::new(r#"{"method": "linear"}"#).unwrap();
    unsafe {
        let mut san = ptr::null_mut();
        assert_eq!(
            ce_sanitizer_fit(s.train, s.test, env.as_ptr(), method.as_ptr(), &mut san),
            CeStatus::Ok
        );

        let mut x = [0.0; 8];
        assert_eq!(ce_dataset_features(s.user, 0, x.as_mut_ptr()), CeStatus::Ok);
        let mut y = [0.0; 8];
        assert_eq!(
            ce_sanitizer_apply(san, x.as_ptr(), 8, 0, y.as_mut_ptr()),
            CeStatus::Ok
        );

        let mut json = ptr::null_mut();
        assert_eq!(ce_sanitizer_to_json(san, &mut json), CeStatus::Ok);
        let json = CString::new(take(json)).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(
            ce_sanitizer_from_json(json.as_ptr(), ptr::null(), &mut back),
            CeStatus::Ok
        );
        let mut z = [0.0; 8];
        assert_eq!(
            ce_sanitizer_apply(back, x.as_ptr(), 8, 0, z.as_mut_ptr()),
            CeStatus::Ok
        );
        assert_eq!(y, z);

        let mut out = ptr::null_mut();
        assert_eq!(
            ce_sanitizer_apply_dataset(san, s.user, &mut out),
            CeStatus::Ok
        );
        let mut first = [0.0; 8];
        assert_eq!(
            ce_dataset_features(out, 0, first.as_mut_ptr()),
            CeStatus::Ok
        );
        assert_eq!(first, y);

        let mut report = ptr::null_mut();
        assert_eq!(
            ce_certify(s.train, s.test, s.user, san, env.as_ptr(), &mut report),
            CeStatus::Ok
        );
        let report: serde_json::Value = serde_json::from_str(&take(report)).unwrap();
        assert_eq!(report["sanitizer"]["method"], "linear");
        assert!(report["privacy"].as_f64().unwrap() >= 0.0);

        ce_dataset_free(out);
        ce_sanitizer_free(back);
        ce_sanitizer_free(san);
    }
}

#[test]
fn certify_without_sanitizer_uses_identity() {
    let s = sets();
    let env = CString::new(ENV).unwrap();
    unsafe {
        let mut report = ptr::null_mut();
        assert_eq!(
            ce_certify(
                s.train,
                s.test,
                ptr::null(),
                ptr::null(),
                env.as_ptr(),
                &mut report
            ),
            CeStatus::Ok
        );
        let report: serde_json::Value = serde_json::from_str(&take(report)).unwrap();
        assert_eq!(report["sanitizer"]["method"], "identity");
    }
}

#[test]
fn arrays_round_trip() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let t = [0_i64, 1];
    let s = [1_i8, -1];
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            ce_dataset_from_arrays(
                x.as_ptr(),
                2,
                3,
                t.as_ptr(),
                s.as_ptr(),
                CeRole::Train,
                &mut ds
            ),
            CeStatus::Ok
        );
        let mut row = [0.0; 3];
        assert_eq!(ce_dataset_features(ds, 1, row.as_mut_ptr()), CeStatus::Ok);
        assert_eq!(row, [4.0, 5.0, 6.0]);
        assert_eq!(
            ce_dataset_features(ds, 2, row.as_mut_ptr()),
            CeStatus::InvalidArgument
        );
        ce_dataset_free(ds);

        let mut ds = ptr::null_mut();
        let st = ce_dataset_from_arrays(
            x.as_ptr(),
            2,
            3,
            t.as_ptr(),
            ptr::null(),
            CeRole::Train,
            &mut ds,
        );
        assert_eq!(st, CeStatus::InvalidArgument);
        assert!(last_error().contains("both"));
    }
}

#[test]
fn scalar_helpers() {
    let a = [1.0, 0.0];
    let b = [1.0, 1.0];
    let mut out = 0.0;
    unsafe {
        assert_eq!(
            ce_cosine_score(a.as_ptr(), b.as_ptr(), 2, &mut out),
            CeStatus::Ok
        );
        assert!((out - 0.5_f64.sqrt()).abs() < 1e-15);

        let pos = [0.9, 0.5];
        let neg = [0.5, 0.1];
        assert_eq!(
            ce_roc_auc(pos.as_ptr(), 2, neg.as_ptr(), 2, &mut out),
            CeStatus::Ok
        );
        assert_eq!(out, 0.875);
        assert_eq!(
            ce_roc_auc(pos.as_ptr(), 2, ptr::null(), 0, &mut out),
            CeStatus::Metric
        );
    }
    assert_eq!(ce_privacy_term(0.5), 1.0);
    assert_eq!(ce_privacy_term(1.0), 0.0);
    let v = unsafe { CStr::from_ptr(ce_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut ds = ptr::null_mut();
        let path = CString::new("/no/such/file.csv").unwrap();
        assert_eq!(
            ce_dataset_load_csv(path.as_ptr(), CeRole::Test, &mut ds),
            CeStatus::Io
        );
        assert!(ds.is_null());
        assert!(last_error().contains("/no/such/file.csv"));

        assert_eq!(
            ce_dataset_load_csv(ptr::null(), CeRole::Test, &mut ds),
            CeStatus::InvalidArgument
        );

        let s = sets();
        let bad = CString::new(r#"{"negatives_per_positive": 0}"#).unwrap();
        let mut report = ptr::null_mut();
        assert_eq!(
            ce_certify(
                s.train,
                s.test,
                ptr::null(),
                ptr::null(),
                bad.as_ptr(),
                &mut report
            ),
            CeStatus::Config
        );
        assert!(report.is_null());

        let wild = CString::new(
            r#"{"method": "mmd", "mmd": {"sigma": 50.0, "step_size": 1e308, "iterations": 5}}"#,
        )
        .unwrap();
        let mut san = ptr::null_mut();
        assert_eq!(
            ce_sanitizer_fit(s.train, s.test, ptr::null(), wild.as_ptr(), &mut san),
            CeStatus::Ok
        );
        let mut out = ptr::null_mut();
        assert_eq!(
            ce_sanitizer_apply_dataset(san, s.user, &mut out),
            CeStatus::Divergence
        );
        ce_sanitizer_free(san);
    }
}

#[test]
fn successful_call_clears_error() {
    unsafe {
        let mut ds = ptr::null_mut();
        ce_dataset_load_csv(ptr::null(), CeRole::Test, &mut ds);
        assert!(!ce_last_error().is_null());
        let mut out = 0.0;
        let a = [1.0];
        ce_cosine_score(a.as_ptr(), a.as_ptr(), 1, &mut out);
        assert!(ce_last_error().is_null());
    }
}
