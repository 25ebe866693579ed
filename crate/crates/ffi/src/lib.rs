//! C ABI for the vbsim toolkit.
//!
//! Conventions:
//! * Every fallible call returns a [`VbStatus`]; `VB_STATUS_OK` is 0.
//! * On failure, a thread-local message is retrievable with
//!   [`vb_last_error_message`].
//! * Heap objects cross the boundary as opaque handles (`VbSpectrum`,
//!   `VbSweep`) that must be released with their `_free` function; `_free`
//!   accepts null.
//! * Configs are TOML text, identical to the CLI's config files.
//! * Panics never unwind across the boundary; they surface as
//!   `VB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use vbsim::bath::ChargeBath;
use vbsim::config::RunConfig;
use vbsim::error::{Error, ErrorClass};
use vbsim::fit::{fit_exponential, t1_two_channel, TimeTrace, TraceKind};
use vbsim::optics::mean_absorption_sweep;
use vbsim::spectrum::{ensemble_spectrum, splitting_estimate, Spectrum, SplittingEstimate};

/// Call outcome. Non-zero values describe the failure class; the detailed
/// message is available from `vb_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VbStatus {
    Ok = 0,
    /// Malformed configuration, table, or argument.
    InvalidInput = 1,
    /// The computation ran but failed numerically (no dip, fit rejected...).
    Numerical = 2,
    /// Filesystem problem.
    Io = 3,
    /// A required pointer argument was null.
    NullPointer = 4,
    /// Internal panic caught at the boundary.
    Panic = 5,
}

/// Transient model selector for `vb_fit_trace`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VbTraceKind {
    Rise = 0,
    Decay = 1,
}

/// Exponential-fit result returned by value through an out-pointer.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VbTraceFit {
    pub offset: f64,
    pub amplitude: f64,
    pub rate_per_us: f64,
    pub offset_sigma: f64,
    pub amplitude_sigma: f64,
    pub rate_sigma: f64,
    pub rss: f64,
    pub iterations: u64,
    /// 1 when the fit converged without diagnostics, else 0.
    pub converged: u8,
}

/// Opaque simulated spectrum handle.
pub struct VbSpectrum {
    inner: Spectrum,
}

/// Opaque thickness-sweep handle: (thickness_nm, mean_alpha_per_nm) pairs.
pub struct VbSweep {
    points: Vec<(f64, f64)>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.into());
}

fn fail(e: Error) -> VbStatus {
    let status = match e.class() {
        ErrorClass::Input => VbStatus::InvalidInput,
        ErrorClass::Numerical => VbStatus::Numerical,
        ErrorClass::Io => VbStatus::Io,
    };
    set_error(e.to_string());
    status
}

fn null_pointer(what: &str) -> VbStatus {
    set_error(format!("{what} must not be null"));
    VbStatus::NullPointer
}

fn guarded(f: impl FnOnce() -> VbStatus) -> VbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            VbStatus::Panic
        }
    }
}

/// # Safety
/// `text` must be a valid NUL-terminated C string.
unsafe fn parse_config(text: *const c_char) -> Result<RunConfig, Error> {
    let s = CStr::from_ptr(text)
        .to_str()
        .map_err(|_| Error::Config("config text is not valid UTF-8".into()))?;
    RunConfig::parse_str(s)
}

/// Copies the message of the most recent failure on this thread into `buf`
/// (NUL-terminated, truncated to `cap`). Returns the full message length in
/// bytes; call with `cap == 0` to query the length.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be null with
/// `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn vb_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Simulates an ensemble ESR spectrum from TOML configuration text and
/// stores a new handle in `*out`.
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated C string and `out` a valid
/// pointer. On success the caller owns the handle and must release it with
/// `vb_spectrum_free`.
#[no_mangle]
pub unsafe extern "C" fn vb_simulate_esr(
    config_toml: *const c_char,
    out: *mut *mut VbSpectrum,
) -> VbStatus {
    if config_toml.is_null() {
        return null_pointer("config_toml");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        let result = (|| -> Result<Spectrum, Error> {
            let config = parse_config(config_toml)?;
            let bath = ChargeBath::new(config.bath_params()?, config.lattice()?)?;
            ensemble_spectrum(
                &bath,
                &config.hamiltonian()?,
                config.drive()?,
                &config.broadening()?,
                config.n_configs(),
                &config.grid()?,
                config.contrast(),
            )
        })();
        match result {
            Ok(spectrum) => {
                *out = Box::into_raw(Box::new(VbSpectrum { inner: spectrum }));
                VbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of grid points in a spectrum; 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle from `vb_simulate_esr`.
#[no_mangle]
pub unsafe extern "C" fn vb_spectrum_len(spectrum: *const VbSpectrum) -> usize {
    if spectrum.is_null() {
        return 0;
    }
    (*spectrum).inner.frequencies_mhz.len()
}

/// Reads one (frequency, normalized PL) sample.
///
/// # Safety
/// `spectrum` must be a live handle; `frequency_mhz` and `value` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vb_spectrum_point(
    spectrum: *const VbSpectrum,
    index: usize,
    frequency_mhz: *mut f64,
    value: *mut f64,
) -> VbStatus {
    if spectrum.is_null() {
        return null_pointer("spectrum");
    }
    if frequency_mhz.is_null() || value.is_null() {
        return null_pointer("output");
    }
    let inner = &(*spectrum).inner;
    if index >= inner.frequencies_mhz.len() {
        set_error(format!(
            "index {index} out of range for a spectrum of {} points",
            inner.frequencies_mhz.len()
        ));
        return VbStatus::InvalidInput;
    }
    *frequency_mhz = inner.frequencies_mhz[index];
    *value = inner.values[index];
    VbStatus::Ok
}

/// Locates resonance dips. Two dips fill all three outputs; a single
/// resonance reports `nu_minus == nu_plus` and zero splitting. No
/// significant dip is a numerical failure.
///
/// # Safety
/// `spectrum` must be a live handle; the three outputs must be valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn vb_spectrum_splitting(
    spectrum: *const VbSpectrum,
    nu_minus_mhz: *mut f64,
    nu_plus_mhz: *mut f64,
    splitting_mhz: *mut f64,
) -> VbStatus {
    if spectrum.is_null() {
        return null_pointer("spectrum");
    }
    if nu_minus_mhz.is_null() || nu_plus_mhz.is_null() || splitting_mhz.is_null() {
        return null_pointer("output");
    }
    guarded(|| match splitting_estimate(&(*spectrum).inner) {
        Ok(SplittingEstimate::TwoDips { nu_minus_mhz: lo, nu_plus_mhz: hi, splitting_mhz: s }) => {
            *nu_minus_mhz = lo;
            *nu_plus_mhz = hi;
            *splitting_mhz = s;
            VbStatus::Ok
        }
        Ok(SplittingEstimate::SingleResonance { nu_mhz, .. }) => {
            *nu_minus_mhz = nu_mhz;
            *nu_plus_mhz = nu_mhz;
            *splitting_mhz = 0.0;
            VbStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Releases a spectrum handle; null is accepted.
///
/// # Safety
/// `spectrum` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn vb_spectrum_free(spectrum: *mut VbSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Runs the thickness sweep of mean optical absorption described by the
/// TOML configuration and stores a new handle in `*out`.
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated C string and `out` a valid
/// pointer. On success the caller owns the handle and must release it with
/// `vb_sweep_free`.
#[no_mangle]
pub unsafe extern "C" fn vb_optics_sweep(
    config_toml: *const c_char,
    out: *mut *mut VbSweep,
) -> VbStatus {
    if config_toml.is_null() {
        return null_pointer("config_toml");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        let result = (|| -> Result<Vec<(f64, f64)>, Error> {
            let config = parse_config(config_toml)?;
            let stack = config.layer_stack()?;
            let (t_min, t_max, t_step) = config.sweep_range();
            mean_absorption_sweep(&stack, config.swept_layer(), t_min, t_max, t_step)
        })();
        match result {
            Ok(points) => {
                *out = Box::into_raw(Box::new(VbSweep { points }));
                VbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of sweep samples; 0 for a null handle.
///
/// # Safety
/// `sweep` must be null or a live handle from `vb_optics_sweep`.
#[no_mangle]
pub unsafe extern "C" fn vb_sweep_len(sweep: *const VbSweep) -> usize {
    if sweep.is_null() {
        return 0;
    }
    (*sweep).points.len()
}

/// Reads one (thickness, mean absorption) sample.
///
/// # Safety
/// `sweep` must be a live handle; `thickness_nm` and `mean_alpha_per_nm`
/// must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vb_sweep_point(
    sweep: *const VbSweep,
    index: usize,
    thickness_nm: *mut f64,
    mean_alpha_per_nm: *mut f64,
) -> VbStatus {
    if sweep.is_null() {
        return null_pointer("sweep");
    }
    if thickness_nm.is_null() || mean_alpha_per_nm.is_null() {
        return null_pointer("output");
    }
    let points = &(*sweep).points;
    if index >= points.len() {
        set_error(format!(
            "index {index} out of range for a sweep of {} points",
            points.len()
        ));
        return VbStatus::InvalidInput;
    }
    *thickness_nm = points[index].0;
    *mean_alpha_per_nm = points[index].1;
    VbStatus::Ok
}

/// Releases a sweep handle; null is accepted.
///
/// # Safety
/// `sweep` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn vb_sweep_free(sweep: *mut VbSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Fits an exponential rise or decay to `len` (time, signal) samples and
/// fills `*out`. A fit that completes but fails its internal checks returns
/// `VB_STATUS_OK` with `out->converged == 0`.
///
/// # Safety
/// `times_us` and `signal` must point to `len` readable doubles each and
/// `out` to a writable `VbTraceFit`.
#[no_mangle]
pub unsafe extern "C" fn vb_fit_trace(
    times_us: *const f64,
    signal: *const f64,
    len: usize,
    kind: VbTraceKind,
    out: *mut VbTraceFit,
) -> VbStatus {
    if times_us.is_null() || signal.is_null() {
        return null_pointer("trace data");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        let times = std::slice::from_raw_parts(times_us, len).to_vec();
        let values = std::slice::from_raw_parts(signal, len).to_vec();
        let result = TimeTrace::new(times, values).and_then(|trace| {
            fit_exponential(
                &trace,
                match kind {
                    VbTraceKind::Rise => TraceKind::Rise,
                    VbTraceKind::Decay => TraceKind::Decay,
                },
            )
        });
        match result {
            Ok(fit) => {
                *out = VbTraceFit {
                    offset: fit.offset,
                    amplitude: fit.amplitude,
                    rate_per_us: fit.rate_per_us,
                    offset_sigma: fit.offset_sigma,
                    amplitude_sigma: fit.amplitude_sigma,
                    rate_sigma: fit.rate_sigma,
                    rss: fit.rss,
                    iterations: fit.iterations as u64,
                    converged: u8::from(fit.converged),
                };
                VbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Two-channel relaxation decomposition: writes (1/t1_total -
/// 1/t1_phonon)^-1 to `*t1_noise_us`, or +infinity when the channels are
/// equal within tolerance.
///
/// # Safety
/// `t1_noise_us` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vb_t1_two_channel(
    t1_total_us: f64,
    t1_phonon_us: f64,
    t1_noise_us: *mut f64,
) -> VbStatus {
    if t1_noise_us.is_null() {
        return null_pointer("t1_noise_us");
    }
    match t1_two_channel(t1_total_us, t1_phonon_us) {
        Ok(Some(v)) => {
            *t1_noise_us = v;
            VbStatus::Ok
        }
        Ok(None) => {
            *t1_noise_us = f64::INFINITY;
            VbStatus::Ok
        }
        Err(e) => fail(e),
    }
}
