#ifndef HTC_H
#define HTC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HtcStatus {
  HTC_STATUS_OK = 0,
  // Null pointer, bad UTF-8 or an unknown key.
  HTC_STATUS_INVALID_ARGUMENT = 1,
  // A physical parameter failed validation.
  HTC_STATUS_INVALID_PARAMETER = 2,
  // Singular solve, pole or non-convergence.
  HTC_STATUS_NUMERICAL = 3,
  // Oracle Hilbert space too large.
  HTC_STATUS_DIMENSION_CAP = 4,
  HTC_STATUS_PANIC = 5,
} HtcStatus;

// Per-point quality flag, matching the `flag` column of CLI output.
typedef enum HtcFlag {
  HTC_FLAG_OK = 0,
  HTC_FLAG_POLE = 1,
  HTC_FLAG_TRUNCATION = 2,
  HTC_FLAG_SINGULAR = 3,
  HTC_FLAG_UNPHYSICAL = 4,
} HtcFlag;

// Parameters, truncation policy and perturbative order.
typedef struct HtcModel HtcModel;

// A sampled spectrum: grid, values (real or complex) and flags.
typedef struct HtcSpectrum HtcSpectrum;

// Hybridized cavity-molecule modes at resonance, in units of Γ.
typedef struct HtcPolaritons {
  double omega_plus;
  double omega_minus;
  double gamma_plus;
  double gamma_minus;
} HtcPolaritons;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *htc_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *htc_version(void);

// New model with the Figure 2 defaults. Release with [`htc_model_free`].
struct HtcModel *htc_model_new(void);

// Model from a TOML document in the CLI configuration format.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum HtcStatus htc_model_from_toml(const char *text, struct HtcModel **out);

// # Safety
// `model` must come from this library and not be used afterwards. Null is
// accepted.
void htc_model_free(struct HtcModel *model);

// Sets a physics field (`lambda`, `g`, `n_molecules`, ...), a policy field
// (`tail_tol`, `k_max_hard`, `total_order_cap`), `order` (1 or 2),
// `include_intermolecular` (0 or 1) or an oracle cutoff
// (`photon_cutoff`, `vib_cutoff`). The model is left unchanged when the
// result fails validation.
//
// # Safety
// `model` must be a live handle and `key` a NUL-terminated string.
enum HtcStatus htc_model_set(struct HtcModel *model, const char *key, double value);

// Reads a physics field by name.
//
// # Safety
// `model` must be a live handle, `key` a NUL-terminated string and `out`
// a valid pointer.
enum HtcStatus htc_model_get(const struct HtcModel *model, const char *key, double *out);

// Complex transmission over `len` cavity detunings (units of Γ).
//
// # Safety
// `grid` must point to `len` doubles and `out` must be a valid pointer.
enum HtcStatus htc_transmission(const struct HtcModel *model,
                                const double *grid,
                                size_t len,
                                struct HtcSpectrum **out);

// Total excited population over `len` cavity detunings.
//
// # Safety
// As [`htc_transmission`].
enum HtcStatus htc_population(const struct HtcModel *model,
                              const double *grid,
                              size_t len,
                              struct HtcSpectrum **out);

// Fluorescence spectrum over `len` emission frequencies.
//
// # Safety
// As [`htc_transmission`].
enum HtcStatus htc_fluorescence(const struct HtcModel *model,
                                const double *grid,
                                size_t len,
                                struct HtcSpectrum **out);

// Master-equation transmission for at most two molecules.
//
// # Safety
// As [`htc_transmission`].
enum HtcStatus htc_oracle_transmission(const struct HtcModel *model,
                                       const double *grid,
                                       size_t len,
                                       struct HtcSpectrum **out);

// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum HtcStatus htc_polaritons(const struct HtcModel *model, struct HtcPolaritons *out);

// N ≈ ω₋²/g².
//
// # Safety
// `out` must be a valid pointer.
enum HtcStatus htc_estimate_n(double omega_minus, double g, double *out);

// # Safety
// `spectrum` must come from this library and not be used afterwards. Null
// is accepted.
void htc_spectrum_free(struct HtcSpectrum *spectrum);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `spectrum` must be a live handle or null.
size_t htc_spectrum_len(const struct HtcSpectrum *spectrum);

// 1 when values are complex (transmission), 0 when real.
//
// # Safety
// `spectrum` must be a live handle or null.
int32_t htc_spectrum_is_complex(const struct HtcSpectrum *spectrum);

// Copies up to `cap` samples into the non-null buffers among `grid`, `re`,
// `im` and `flags`. `im` receives zeros for real spectra. Returns the
// number of samples copied.
//
// # Safety
// Each non-null buffer must hold `cap` elements.
size_t htc_spectrum_copy(const struct HtcSpectrum *spectrum,
                         double *grid,
                         double *re,
                         double *im,
                         enum HtcFlag *flags,
                         size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HTC_H */
