use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use rlfdc::fixtures;
use rlfdc_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe { rlfdc_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

fn example_handle() -> *mut RlfdcDataset {
    let json = CString::new(fixtures::six_method_example().to_canonical_string()).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(
        unsafe { rlfdc_dataset_from_json(json.as_ptr(), &mut d) },
        RlfdcStatus::Ok
    );
    d
}

#[test]
fn dataset_handles() {
    let d = example_handle();
    unsafe {
        assert_eq!(rlfdc_dataset_num_tests(d), 21);
        assert_eq!(rlfdc_dataset_num_methods(d), 6);
        assert_eq!(rlfdc_dataset_num_elements(d), 28);
        rlfdc_dataset_free(d);
        rlfdc_dataset_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("{\"version\": 1").unwrap();
    let mut d = ptr::null_mut();
    let status = unsafe { rlfdc_dataset_from_json(bad.as_ptr(), &mut d) };
    assert_eq!(status, RlfdcStatus::Parse);
    assert!(d.is_null());
    assert!(!last_error().is_empty());

    let status = unsafe { rlfdc_dataset_from_json(ptr::null(), &mut d) };
    assert_eq!(status, RlfdcStatus::NullArgument);
    assert!(last_error().contains("null"));

    let missing = CString::new("/nonexistent/model.json").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { rlfdc_model_load(missing.as_ptr(), &mut m) },
        RlfdcStatus::Io
    );
}

#[test]
fn select_with_tfd_over_c_abi() {
    let d = example_handle();
    let metric = CString::new("tfd").unwrap();
    let mut selected = [0usize; 3];
    let mut ranks = [0usize; 4];
    let status = unsafe {
        rlfdc_select(
            d,
            metric.as_ptr(),
            ptr::null(),
            0.0,
            0,
            3,
            selected.as_mut_ptr(),
            ranks.as_mut_ptr(),
        )
    };
    assert_eq!(status, RlfdcStatus::Ok, "{}", last_error());
    assert!(ranks.iter().all(|&r| (1..=6).contains(&r)));
    let mut sorted = selected;
    sorted.sort();
    assert!(sorted.windows(2).all(|w| w[0] < w[1]));

    let unknown = CString::new("nope").unwrap();
    let status = unsafe {
        rlfdc_select(
            d,
            unknown.as_ptr(),
            ptr::null(),
            0.0,
            0,
            3,
            selected.as_mut_ptr(),
            ranks.as_mut_ptr(),
        )
    };
    assert_eq!(status, RlfdcStatus::InvalidInput);
    unsafe { rlfdc_dataset_free(d) };
}

#[test]
fn train_predict_save_load() {
    let d = example_handle();
    let handles = [d as *const RlfdcDataset];
    let mut m = ptr::null_mut();
    let status = unsafe { rlfdc_model_train(handles.as_ptr(), 1, 2, 5, &mut m) };
    assert_eq!(status, RlfdcStatus::Ok, "{}", last_error());

    let mut a = 0.0;
    let selected = [1usize];
    assert_eq!(
        unsafe { rlfdc_predict_fdc(m, d, selected.as_ptr(), 1, 2, &mut a) },
        RlfdcStatus::Ok
    );
    assert!(a.is_finite());
    // a candidate already in the suite is rejected
    assert_eq!(
        unsafe { rlfdc_predict_fdc(m, d, selected.as_ptr(), 1, 1, &mut a) },
        RlfdcStatus::InvalidInput
    );

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { rlfdc_model_save(m, path.as_ptr()) },
        RlfdcStatus::Ok
    );
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { rlfdc_model_load(path.as_ptr(), &mut back) },
        RlfdcStatus::Ok
    );
    let mut b = 0.0;
    unsafe { rlfdc_predict_fdc(back, d, selected.as_ptr(), 1, 2, &mut b) };
    assert_eq!(a.to_bits(), b.to_bits());
    unsafe {
        rlfdc_model_free(m);
        rlfdc_model_free(back);
        rlfdc_dataset_free(d);
    }
}

#[test]
fn header_declares_every_export() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/rlfdc.h");
    let text = std::fs::read_to_string(&header).unwrap();
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for name in exports {
        assert!(
            text.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    // the header must stand alone as C
    if let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c"])
        .arg(&header)
        .output()
    {
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
