#ifndef FUSSCAT_H
#define FUSSCAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum FcStatus {
  FC_STATUS_OK = 0,
  FC_STATUS_INVALID_ARGUMENT = 1,
  FC_STATUS_NUMERICAL = 2,
  FC_STATUS_RESOURCE_LIMIT = 3,
  FC_STATUS_BUFFER_TOO_SMALL = 4,
  FC_STATUS_IO = 5,
  FC_STATUS_PANIC = 6,
} FcStatus;

/**
 * Which fixed-point equation a transform call solves.
 */
typedef enum FcForm {
  FC_FORM_SQUARED = 0,
  FC_FORM_SYMMETRIZED = 1,
} FcForm;

/**
 * Piecewise-linear distribution function of a limiting law.
 */
typedef struct FcCdf FcCdf;

/**
 * Squared singular values of one simulated matrix, nonincreasing.
 */
typedef struct FcSpectrum FcSpectrum;

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *fc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fc_version(void);

/**
 * Writes `alpha_k(m)` in decimal, NUL-terminated, into `buf`.
 *
 * `*needed` receives the buffer size required including the NUL; when
 * `buf_len` is too small nothing is written and `BufferTooSmall` is returned.
 *
 * # Safety
 * `buf` must be valid for `buf_len` bytes (or null with `buf_len == 0`);
 * `needed` must be valid for writes.
 */
enum FcStatus fc_moment(uint32_t m, size_t k, char *buf, size_t buf_len, size_t *needed);

/**
 * Physical root `s(z)` of the fixed-point equation and its residual.
 *
 * # Safety
 * Output pointers must be valid for writes; `residual` may be null.
 */
enum FcStatus fc_stieltjes_solve(uint32_t m,
                                 enum FcForm form,
                                 double re,
                                 double im,
                                 double *s_re,
                                 double *s_im,
                                 double *residual);

/**
 * Limiting CDF of the squared singular values for power `m`.
 *
 * # Safety
 * `out` must be valid for writes. Release the handle with [`fc_cdf_free`].
 */
enum FcStatus fc_cdf_new(uint32_t m, size_t points, double v_offset, struct FcCdf **out);

/**
 * Symmetrized law `(1 + sgn(x) G(x^2)) / 2` as a new handle.
 *
 * # Safety
 * `cdf` must be a live handle; `out` must be valid for writes.
 */
enum FcStatus fc_cdf_symmetrize(const struct FcCdf *cdf, struct FcCdf **out);

/**
 * `G(x)`, clamped to `[0, 1]`; NaN for a null handle.
 *
 * # Safety
 * `cdf` must be null or a live handle.
 */
double fc_cdf_eval(const struct FcCdf *cdf, double x);

/**
 * Number of knots; 0 for a null handle.
 *
 * # Safety
 * `cdf` must be null or a live handle.
 */
size_t fc_cdf_len(const struct FcCdf *cdf);

/**
 * Copy the knots into `x` and `g`, each of length at least [`fc_cdf_len`].
 *
 * # Safety
 * `cdf` must be a live handle; `x` and `g` valid for `len` doubles.
 */
enum FcStatus fc_cdf_knots(const struct FcCdf *cdf, double *x, double *g, size_t len);

/**
 * # Safety
 * `cdf` must be null or a handle not yet freed.
 */
void fc_cdf_free(struct FcCdf *cdf);

/**
 * Simulate one `n x n` matrix power and return its squared singular values.
 *
 * `dist` is a distribution name such as `complex_gaussian` or
 * `centered_bernoulli(0.3)`. `tau_exp <= 0` selects the default exponent.
 *
 * # Safety
 * `dist` must be a NUL-terminated string; `out` must be valid for writes.
 * Release the handle with [`fc_spectrum_free`].
 */
enum FcStatus fc_spectrum_simulate(size_t n,
                                   uint32_t m,
                                   const char *dist,
                                   uint64_t seed,
                                   bool truncate,
                                   double tau_exp,
                                   struct FcSpectrum **out);

/**
 * # Safety
 * `spec` must be null or a live handle.
 */
size_t fc_spectrum_len(const struct FcSpectrum *spec);

/**
 * Copy the values (nonincreasing) into `out`.
 *
 * # Safety
 * `spec` must be a live handle; `out` valid for `len` doubles.
 */
enum FcStatus fc_spectrum_values(const struct FcSpectrum *spec, double *out, size_t len);

/**
 * # Safety
 * `spec` must be null or a handle not yet freed.
 */
void fc_spectrum_free(struct FcSpectrum *spec);

/**
 * `sup_x |F_n(x) - G(x)|` between a simulated spectrum and a CDF.
 *
 * # Safety
 * Both handles must be live; `out` must be valid for writes.
 */
enum FcStatus fc_kolmogorov_distance(const struct FcSpectrum *spec,
                                     const struct FcCdf *cdf,
                                     double *out);

#endif  /* FUSSCAT_H */
