#ifndef SLEPIAN_QNS_H
#define SLEPIAN_QNS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SqStatus {
  SQ_STATUS_OK = 0,
  SQ_STATUS_NULL_POINTER = 1,
  SQ_STATUS_INVALID_ARGUMENT = 2,
  SQ_STATUS_NUMERIC = 3,
  SQ_STATUS_CONFIG = 4,
  SQ_STATUS_IO = 5,
  SQ_STATUS_BUFFER_TOO_SMALL = 6,
  SQ_STATUS_PANIC = 7,
} SqStatus;

/**
 * Carrier modulation of a shifted taper.
 */
typedef enum SqModulation {
  SQ_MODULATION_COS = 0,
  SQ_MODULATION_SIN = 1,
  SQ_MODULATION_SSB = 2,
} SqModulation;

/**
 * A one-sided noise PSD model.
 */
typedef struct SqPsd SqPsd;

/**
 * DPSS tapers of orders 0..=max_order for one (N, W).
 */
typedef struct SqTaperSet SqTaperSet;

/**
 * A piecewise-constant control waveform.
 */
typedef struct SqWaveform SqWaveform;

/**
 * Passband [a, b] around a shift and its area A.
 */
typedef struct SqPassband {
  double center;
  double a;
  double b;
  double area;
} SqPassband;

/**
 * Outcome of one simulated experiment.
 */
typedef struct SqSignal {
  double signal;
  double variance;
  size_t shots;
} SqSignal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sq_version(void);

/**
 * Length in bytes (without the terminator) of the last error on this thread; 0 if none.
 */
size_t sq_last_error_length(void);

/**
 * Copy the last error message into `buf`, NUL-terminated.
 *
 * Returns the number of bytes written excluding the terminator, or -1 if
 * `buf` is null or smaller than `sq_last_error_length() + 1`.
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
ptrdiff_t sq_last_error_message(char *buf, size_t len);

void sq_clear_last_error(void);

/**
 * Compute DPSS tapers of orders 0..=max_order with N = n and bandwidth w.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to free with `sq_taper_set_free`.
 */
enum SqStatus sq_dpss_compute(size_t n, double w, size_t max_order, struct SqTaperSet **out);

/**
 * # Safety
 * `set` must be null or a handle from `sq_dpss_compute` not yet freed.
 */
void sq_taper_set_free(struct SqTaperSet *set);

/**
 * # Safety
 * `set` must be a live handle.
 */
size_t sq_taper_set_count(const struct SqTaperSet *set);

/**
 * # Safety
 * `set` must be a live handle.
 */
size_t sq_taper_set_length(const struct SqTaperSet *set);

/**
 * Copy taper `order` into `buf`, which must hold `sq_taper_set_length(set)` values.
 *
 * # Safety
 * `set` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum SqStatus sq_taper_set_values(const struct SqTaperSet *set,
                                  size_t order,
                                  double *buf,
                                  size_t len);

/**
 * Concentration eigenvalue of taper `order`.
 *
 * # Safety
 * `set` must be a live handle and `out` valid.
 */
enum SqStatus sq_taper_set_eigenvalue(const struct SqTaperSet *set, size_t order, double *out);

/**
 * DPSWF of taper `order` at angular frequency `omega` (rad/s) for sample spacing `dt` (s).
 *
 * # Safety
 * `set` must be a live handle and `out` valid.
 */
enum SqStatus sq_taper_set_dpswf(const struct SqTaperSet *set,
                                 size_t order,
                                 double dt,
                                 double omega,
                                 double *out);

/**
 * Waveform from taper `order`, shifted to `omega_s` (rad/s) and normalized to
 * power `power` (rad^2/s^2). `power <= 0` skips normalization.
 *
 * # Safety
 * `set` must be a live handle and `out` valid.
 */
enum SqStatus sq_waveform_from_taper(const struct SqTaperSet *set,
                                     size_t order,
                                     double dt,
                                     enum SqModulation modulation,
                                     double omega_s,
                                     double power,
                                     struct SqWaveform **out);

/**
 * Waveform from `len` Rabi amplitudes (rad/s) with segment duration `dt` (s).
 *
 * # Safety
 * `omega` must point to `len` readable doubles and `out` must be valid.
 */
enum SqStatus sq_waveform_new(const double *omega, size_t len, double dt, struct SqWaveform **out);

/**
 * # Safety
 * `w` must be null or a live waveform handle.
 */
void sq_waveform_free(struct SqWaveform *w);

/**
 * # Safety
 * `w` must be a live handle.
 */
size_t sq_waveform_length(const struct SqWaveform *w);

/**
 * Copy the Rabi amplitudes into `buf`.
 *
 * # Safety
 * `w` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum SqStatus sq_waveform_values(const struct SqWaveform *w, double *buf, size_t len);

/**
 * Filter function F(omega) in rad^2.
 *
 * # Safety
 * `w` must be a live handle and `out` valid.
 */
enum SqStatus sq_waveform_filter(const struct SqWaveform *w, double omega, double *out);

/**
 * Passband of half-width 2 pi W / dt around `omega_s` and its area.
 *
 * # Safety
 * `w` must be a live handle and `out` valid.
 */
enum SqStatus sq_waveform_passband(const struct SqWaveform *w,
                                   double omega_s,
                                   double bandwidth,
                                   struct SqPassband *out);

/**
 * Lorentzian PSD: amplitude / (1 + ((|omega| - center) / width)^2), with center and width in rad/s.
 *
 * # Safety
 * `out` must be valid.
 */
enum SqStatus sq_psd_lorentzian(double amplitude, double center, double width, struct SqPsd **out);

/**
 * PSD from its JSON form, e.g. `{"kind":"gaussian_mix","peaks":[...]}` (rad/s units).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid.
 */
enum SqStatus sq_psd_from_json(const char *json, struct SqPsd **out);

/**
 * # Safety
 * `p` must be null or a live PSD handle.
 */
void sq_psd_free(struct SqPsd *p);

/**
 * # Safety
 * `p` must be a live handle and `out` valid.
 */
enum SqStatus sq_psd_eval(const struct SqPsd *p, double omega, double *out);

/**
 * Noise-free signal S(T) = (1/pi) integral F S over [0, inf).
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum SqStatus sq_expected_signal(const struct SqPsd *psd, const struct SqWaveform *w, double *out);

/**
 * Simulate `shots` single-shot measurements of the waveform under the PSD.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum SqStatus sq_simulate(const struct SqPsd *psd,
                          const struct SqWaveform *w,
                          size_t shots,
                          uint64_t seed,
                          struct SqSignal *out);

/**
 * Run a scenario from its JSON config and write the bundle into `out_dir`.
 *
 * # Safety
 * `config_json` and `out_dir` must be NUL-terminated strings.
 */
enum SqStatus sq_scenario_run(const char *config_json, const char *out_dir, bool oracle_only);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLEPIAN_QNS_H */
