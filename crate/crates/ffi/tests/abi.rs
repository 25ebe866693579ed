//! Exercises the library through its C ABI exactly as a foreign caller
//! would: TOML text in, status codes and plain data out.

use std::ffi::CString;
use std::os::raw::c_char;
use std::ptr;

use vbsim_ffi::*;

fn last_error() -> String {
    unsafe {
        let needed = vb_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0u8; needed + 1];
        vb_last_error_message(buf.as_mut_ptr().cast::<c_char>(), buf.len());
        buf.truncate(needed);
        String::from_utf8(buf).expect("error message is UTF-8")
    }
}

fn c(text: &str) -> CString {
    CString::new(text).expect("no interior NUL")
}

#[test]
fn simulate_then_inspect_spectrum() {
    let config = c(r#"
seed = 7

[bath]
geometry = "bulk-sphere"
rho_c_per_nm3 = 0.054
radius_nm = 5.0

[esr]
n_configs = 16
grid_min_mhz = 3000.0
grid_max_mhz = 3900.0
grid_step_mhz = 3.0
"#);
    let mut handle: *mut VbSpectrum = ptr::null_mut();
    let status = unsafe { vb_simulate_esr(config.as_ptr(), &mut handle) };
    assert_eq!(status, VbStatus::Ok, "simulate failed: {}", last_error());
    assert!(!handle.is_null());

    let len = unsafe { vb_spectrum_len(handle) };
    assert_eq!(len, 301);

    let (mut f, mut v) = (0.0, 0.0);
    let status = unsafe { vb_spectrum_point(handle, 0, &mut f, &mut v) };
    assert_eq!(status, VbStatus::Ok);
    assert_eq!(f, 3000.0);
    assert!(v.is_finite() && v > 0.0 && v <= 1.0);

    let status = unsafe { vb_spectrum_point(handle, len, &mut f, &mut v) };
    assert_eq!(status, VbStatus::InvalidInput);
    assert!(last_error().contains("out of range"));

    unsafe { vb_spectrum_free(handle) };
}

#[test]
fn splitting_of_unperturbed_spectrum_is_zero() {
    // With no charges the two transitions coincide at the zero-field
    // splitting, so the estimator reports a single resonance.
    let config = c(r#"
seed = 1

[bath]
geometry = "bulk-sphere"
rho_c_per_nm3 = 1.0e-9
radius_nm = 5.0

[esr]
n_configs = 4
"#);
    let mut handle: *mut VbSpectrum = ptr::null_mut();
    let status = unsafe { vb_simulate_esr(config.as_ptr(), &mut handle) };
    assert_eq!(status, VbStatus::Ok, "simulate failed: {}", last_error());

    let (mut lo, mut hi, mut split) = (0.0, 0.0, 0.0);
    let status = unsafe { vb_spectrum_splitting(handle, &mut lo, &mut hi, &mut split) };
    assert_eq!(status, VbStatus::Ok, "splitting failed: {}", last_error());
    assert_eq!(lo, hi);
    assert_eq!(split, 0.0);
    assert!((lo - 3460.0).abs() < 5.0, "resonance at {lo} MHz");

    unsafe { vb_spectrum_free(handle) };
}

#[test]
fn unknown_config_key_is_named_in_the_error() {
    let config = c("seed = 1\n\n[bath]\nrho_c = 0.05\n");
    let mut handle: *mut VbSpectrum = ptr::null_mut();
    let status = unsafe { vb_simulate_esr(config.as_ptr(), &mut handle) };
    assert_eq!(status, VbStatus::InvalidInput);
    assert!(handle.is_null());
    let message = last_error();
    assert!(message.contains("rho_c"), "message was: {message}");
}

#[test]
fn null_arguments_are_rejected() {
    let config = c("seed = 1\n");
    let status = unsafe { vb_simulate_esr(config.as_ptr(), ptr::null_mut()) };
    assert_eq!(status, VbStatus::NullPointer);
    let mut handle: *mut VbSpectrum = ptr::null_mut();
    let status = unsafe { vb_simulate_esr(ptr::null(), &mut handle) };
    assert_eq!(status, VbStatus::NullPointer);
    assert_eq!(unsafe { vb_spectrum_len(ptr::null()) }, 0);
    unsafe {
        vb_spectrum_free(ptr::null_mut());
        vb_sweep_free(ptr::null_mut());
    }
}

#[test]
fn optics_sweep_over_the_default_stack() {
    let config = c(r#"
seed = 1

[optics]
sweep_min_nm = 20.0
sweep_max_nm = 60.0
sweep_step_nm = 10.0
"#);
    let mut handle: *mut VbSweep = ptr::null_mut();
    let status = unsafe { vb_optics_sweep(config.as_ptr(), &mut handle) };
    assert_eq!(status, VbStatus::Ok, "sweep failed: {}", last_error());
    let len = unsafe { vb_sweep_len(handle) };
    assert_eq!(len, 5);

    let (mut t, mut alpha) = (0.0, 0.0);
    for k in 0..len {
        let status = unsafe { vb_sweep_point(handle, k, &mut t, &mut alpha) };
        assert_eq!(status, VbStatus::Ok);
        assert_eq!(t, 20.0 + 10.0 * k as f64);
        assert!(alpha > 0.0, "absorbing film should absorb at {t} nm");
    }
    unsafe { vb_sweep_free(handle) };
}

#[test]
fn trace_fit_recovers_a_noiseless_decay() {
    let t1_us = 13.0;
    let times: Vec<f64> = (0..120).map(|k| k as f64 * 0.5).collect();
    let signal: Vec<f64> = times.iter().map(|t| 1.0 + 0.3 * (-t / t1_us).exp()).collect();

    let mut fit = VbTraceFit {
        offset: 0.0,
        amplitude: 0.0,
        rate_per_us: 0.0,
        offset_sigma: 0.0,
        amplitude_sigma: 0.0,
        rate_sigma: 0.0,
        rss: 0.0,
        iterations: 0,
        converged: 0,
    };
    let status = unsafe {
        vb_fit_trace(
            times.as_ptr(),
            signal.as_ptr(),
            times.len(),
            VbTraceKind::Decay,
            &mut fit,
        )
    };
    assert_eq!(status, VbStatus::Ok, "fit failed: {}", last_error());
    assert_eq!(fit.converged, 1);
    assert!((fit.rate_per_us - 1.0 / t1_us).abs() < 1e-4 / t1_us);
    assert!((fit.offset - 1.0).abs() < 1e-4);
    assert!((fit.amplitude - 0.3).abs() < 1e-4);
}

#[test]
fn trace_fit_rejects_malformed_input() {
    let times = [0.0, 1.0, 2.0];
    let signal = [1.0, 0.5, 0.2];
    let mut fit = VbTraceFit {
        offset: 0.0,
        amplitude: 0.0,
        rate_per_us: 0.0,
        offset_sigma: 0.0,
        amplitude_sigma: 0.0,
        rate_sigma: 0.0,
        rss: 0.0,
        iterations: 0,
        converged: 0,
    };
    let status = unsafe {
        vb_fit_trace(times.as_ptr(), signal.as_ptr(), 3, VbTraceKind::Decay, &mut fit)
    };
    assert_eq!(status, VbStatus::InvalidInput);
}

#[test]
fn two_channel_decomposition() {
    let mut out = 0.0;
    let status = unsafe { vb_t1_two_channel(1.0, 13.0, &mut out) };
    assert_eq!(status, VbStatus::Ok);
    assert!((out - 13.0 / 12.0).abs() < 1e-12);

    let status = unsafe { vb_t1_two_channel(5.0, 5.0, &mut out) };
    assert_eq!(status, VbStatus::Ok);
    assert!(out.is_infinite());

    let status = unsafe { vb_t1_two_channel(13.0, 1.0, &mut out) };
    assert_eq!(status, VbStatus::InvalidInput);
}
