#ifndef VBSIM_H
#define VBSIM_H

/* Generated by cbindgen from the vbsim-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Call outcome. Non-zero values describe the failure class; the detailed
// message is available from `vb_last_error_message`.
typedef enum VbStatus {
  VbStatus_Ok = 0,
  // Malformed configuration, table, or argument.
  VbStatus_InvalidInput = 1,
  // The computation ran but failed numerically (no dip, fit rejected...).
  VbStatus_Numerical = 2,
  // Filesystem problem.
  VbStatus_Io = 3,
  // A required pointer argument was null.
  VbStatus_NullPointer = 4,
  // Internal panic caught at the boundary.
  VbStatus_Panic = 5,
} VbStatus;

// Transient model selector for `vb_fit_trace`.
typedef enum VbTraceKind {
  VbTraceKind_Rise = 0,
  VbTraceKind_Decay = 1,
} VbTraceKind;

// Opaque simulated spectrum handle.
typedef struct VbSpectrum VbSpectrum;

// Opaque thickness-sweep handle: (thickness_nm, mean_alpha_per_nm) pairs.
typedef struct VbSweep VbSweep;

// Exponential-fit result returned by value through an out-pointer.
typedef struct VbTraceFit {
  double offset;
  double amplitude;
  double rate_per_us;
  double offset_sigma;
  double amplitude_sigma;
  double rate_sigma;
  double rss;
  uint64_t iterations;
  // 1 when the fit converged without diagnostics, else 0.
  uint8_t converged;
} VbTraceFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the message of the most recent failure on this thread into `buf`
// (NUL-terminated, truncated to `cap`). Returns the full message length in
// bytes; call with `cap == 0` to query the length.
//
// # Safety
// `buf` must point to at least `cap` writable bytes, or be null with
// `cap == 0`.
uintptr_t vb_last_error_message(char *buf, uintptr_t cap);

// Simulates an ensemble ESR spectrum from TOML configuration text and
// stores a new handle in `*out`.
//
// # Safety
// `config_toml` must be a valid NUL-terminated C string and `out` a valid
// pointer. On success the caller owns the handle and must release it with
// `vb_spectrum_free`.
enum VbStatus vb_simulate_esr(const char *config_toml, struct VbSpectrum **out);

// Number of grid points in a spectrum; 0 for a null handle.
//
// # Safety
// `spectrum` must be null or a live handle from `vb_simulate_esr`.
uintptr_t vb_spectrum_len(const struct VbSpectrum *spectrum);

// Reads one (frequency, normalized PL) sample.
//
// # Safety
// `spectrum` must be a live handle; `frequency_mhz` and `value` must be
// valid pointers.
enum VbStatus vb_spectrum_point(const struct VbSpectrum *spectrum,
                                uintptr_t index,
                                double *frequency_mhz,
                                double *value);

// Locates resonance dips. Two dips fill all three outputs; a single
// resonance reports `nu_minus == nu_plus` and zero splitting. No
// significant dip is a numerical failure.
//
// # Safety
// `spectrum` must be a live handle; the three outputs must be valid
// pointers.
enum VbStatus vb_spectrum_splitting(const struct VbSpectrum *spectrum,
                                    double *nu_minus_mhz,
                                    double *nu_plus_mhz,
                                    double *splitting_mhz);

// Releases a spectrum handle; null is accepted.
//
// # Safety
// `spectrum` must be null or a handle not freed before.
void vb_spectrum_free(struct VbSpectrum *spectrum);

// Runs the thickness sweep of mean optical absorption described by the
// TOML configuration and stores a new handle in `*out`.
//
// # Safety
// `config_toml` must be a valid NUL-terminated C string and `out` a valid
// pointer. On success the caller owns the handle and must release it with
// `vb_sweep_free`.
enum VbStatus vb_optics_sweep(const char *config_toml, struct VbSweep **out);

// Number of sweep samples; 0 for a null handle.
//
// # Safety
// `sweep` must be null or a live handle from `vb_optics_sweep`.
uintptr_t vb_sweep_len(const struct VbSweep *sweep);

// Reads one (thickness, mean absorption) sample.
//
// # Safety
// `sweep` must be a live handle; `thickness_nm` and `mean_alpha_per_nm`
// must be valid pointers.
enum VbStatus vb_sweep_point(const struct VbSweep *sweep,
                             uintptr_t index,
                             double *thickness_nm,
                             double *mean_alpha_per_nm);

// Releases a sweep handle; null is accepted.
//
// # Safety
// `sweep` must be null or a handle not freed before.
void vb_sweep_free(struct VbSweep *sweep);

// Fits an exponential rise or decay to `len` (time, signal) samples and
// fills `*out`. A fit that completes but fails its internal checks returns
// `VB_STATUS_OK` with `out->converged == 0`.
//
// # Safety
// `times_us` and `signal` must point to `len` readable doubles each and
// `out` to a writable `VbTraceFit`.
enum VbStatus vb_fit_trace(const double *times_us,
                           const double *signal,
                           uintptr_t len,
                           enum VbTraceKind kind,
                           struct VbTraceFit *out);

// Two-channel relaxation decomposition: writes (1/t1_total -
// 1/t1_phonon)^-1 to `*t1_noise_us`, or +infinity when the channels are
// equal within tolerance.
//
// # Safety
// `t1_noise_us` must be a valid pointer.
enum VbStatus vb_t1_two_channel(double t1_total_us, double t1_phonon_us, double *t1_noise_us);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VBSIM_H */
