use std::ffi::{CStr, CString};
use std::ptr;

use smnmix_ffi::*;

fn toy() -> (Vec<f64>, Vec<f64>) {
    // y = 1 + 2x + small deterministic wiggle
    let mut y = Vec::new();
    let mut x = Vec::new();
    for i in 0..40 {
        let v = i as f64 / 10.0 - 2.0;
        x.extend([1.0, v]);
        y.push(1.0 + 2.0 * v + 0.3 * ((i * 7 % 11) as f64 / 11.0 - 0.5));
    }
    (y, x)
}

fn last_error() -> String {
    let p = smn_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn fit_round_trip() {
    let (y, x) = toy();
    let mut data = ptr::null_mut();
    assert_eq!(unsafe { smn_dataset_new(y.as_ptr(), x.as_ptr(), 40, 2, &mut data) }, SmnStatus::Ok);
    let mut opts = smn_sampler_options_default(9);
    opts.iterations = 600;
    opts.burn_in = 100;
    opts.warmup_iters = 200;
    let mut fit = ptr::null_mut();
    assert_eq!(unsafe { smn_fit(data, &opts, &mut fit) }, SmnStatus::Ok);
    assert_eq!(unsafe { smn_fit_num_draws(fit) }, 500);
    let mut rho = [0.0; 3];
    assert_eq!(unsafe { smn_fit_rho_hat(fit, rho.as_mut_ptr()) }, SmnStatus::Ok);
    assert!((rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let sel = unsafe { smn_fit_selected_model(fit) };
    assert!((1..=3).contains(&sel));
    let mut beta = [0.0; 2];
    let mut s2 = 0.0;
    assert_eq!(unsafe { smn_fit_posterior_means(fit, beta.as_mut_ptr(), 2, &mut s2) }, SmnStatus::Ok);
    assert!((beta[1] - 2.0).abs() < 0.2, "{beta:?}");
    assert_eq!(unsafe { smn_fit_posterior_means(fit, beta.as_mut_ptr(), 3, &mut s2) }, SmnStatus::InvalidInput);
    let mut crit = SmnCriteria::default();
    assert_eq!(unsafe { smn_fit_criteria(fit, data, &mut crit) }, SmnStatus::Ok);
    assert!(crit.dic.is_finite() && crit.lpml.is_finite());

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("d.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { smn_fit_write_draws(fit, path.as_ptr()) }, SmnStatus::Ok);
    let text = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert_eq!(text.lines().count(), 501);
    unsafe {
        smn_fit_free(fit);
        smn_dataset_free(data);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut out = 0.0;
    assert_eq!(unsafe { smn_kl_match_slash_df(1.5, &mut out) }, SmnStatus::InvalidInput);
    assert!(last_error().contains("df must exceed 2"));
    assert_eq!(unsafe { smn_kl_match_slash_df(15.0, ptr::null_mut()) }, SmnStatus::NullPointer);
    assert_eq!(unsafe { smn_kl_match_slash_df(15.0, &mut out) }, SmnStatus::Ok);
    assert!((3.26..=3.46).contains(&out));

    let (y, x) = toy();
    let mut data = ptr::null_mut();
    assert_eq!(unsafe { smn_dataset_new(y.as_ptr(), ptr::null(), 40, 2, &mut data) }, SmnStatus::NullPointer);
    assert!(data.is_null());
    assert_eq!(unsafe { smn_dataset_new(y.as_ptr(), x.as_ptr(), 40, 2, &mut data) }, SmnStatus::Ok);
    let flags = vec![1u8; 40];
    let kappa = vec![100.0; 40];
    assert_eq!(unsafe { smn_dataset_set_censoring(data, flags.as_ptr(), kappa.as_ptr()) }, SmnStatus::DataError);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { smn_fit_selected_model(ptr::null()) }, 0);
    unsafe {
        smn_dataset_free(data);
        smn_dataset_free(ptr::null_mut());
        smn_fit_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/smnmix.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["smn_dataset_new", "smn_fit", "smn_fit_free", "smn_last_error", "SMN_STATUS_NUMERICAL_FAILURE"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).status() else {
        eprintln!("no C compiler found; skipping syntax check");
        return;
    };
    assert!(status.success());
}
