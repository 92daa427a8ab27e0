#ifndef WIENER_CHAOS_H
#define WIENER_CHAOS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum WcStatus {
  WC_STATUS_OK = 0,
  WC_STATUS_NULL_POINTER = 1,
  WC_STATUS_INVALID_ARGUMENT = 2,
  WC_STATUS_DIMENSION_MISMATCH = 3,
  WC_STATUS_ORDER_MISMATCH = 4,
  WC_STATUS_DEGENERATE = 5,
  WC_STATUS_NON_SYMMETRIC = 6,
  WC_STATUS_SAMPLE_TOO_SMALL = 7,
  WC_STATUS_MODEL_MISMATCH = 8,
  WC_STATUS_PANIC = 9,
} WcStatus;

/**
 * Functional family of a statistic plan.
 */
typedef enum WcFamily {
  WC_FAMILY_F_BETA = 0,
  WC_FAMILY_L_EPS = 1,
  WC_FAMILY_A_BETA = 2,
  WC_FAMILY_B_EPS = 3,
} WcFamily;

/**
 * Grid type; `Anchored` uses the functional's `eps`.
 */
typedef enum WcGridKind {
  WC_GRID_KIND_UNIFORM = 0,
  WC_GRID_KIND_GEOMETRIC = 1,
  WC_GRID_KIND_ANCHORED = 2,
} WcGridKind;

/**
 * Embedded second-chaos statistic of a functional.
 */
typedef struct WcPlan WcPlan;

/**
 * Symmetric coefficient tensor.
 */
typedef struct WcTensor WcTensor;

/**
 * Functional parameters. Fields a family does not use are ignored;
 * `A_beta` uses the same `beta` on all `dims` axes.
 */
typedef struct WcFunctional {
  enum WcFamily family;
  double hurst;
  double beta;
  double eps;
  size_t dims;
} WcFunctional;

/**
 * Exact quantities of a plan on its grid.
 */
typedef struct WcPlanMoments {
  size_t generator_count;
  double mean;
  double normalization;
  double variance;
  double excess_kurtosis;
  double contraction_ratio;
} WcPlanMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *wc_version(void);

/**
 * Copies the last error message of this thread into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t wc_last_error_message(char *buf, size_t len);

/**
 * Symmetrized tensor of order `order` over `dim` coordinates from
 * `dim^order` row-major coefficients.
 *
 * # Safety
 * `coeffs` must hold `len` values; `out` must be writable.
 */
enum WcStatus wc_tensor_new(size_t order,
                            size_t dim,
                            const double *coeffs,
                            size_t len,
                            struct WcTensor **out);

/**
 * # Safety
 * `t` must come from [`wc_tensor_new`] and not be used afterwards.
 */
void wc_tensor_free(struct WcTensor *t);

/**
 * # Safety
 * `t` must be a live tensor handle; `order` and `dim` writable.
 */
enum WcStatus wc_tensor_shape(const struct WcTensor *t, size_t *order, size_t *dim);

/**
 * Copies the `dim^order` coefficients into `out`.
 *
 * # Safety
 * `out` must be writable for `len` values.
 */
enum WcStatus wc_tensor_coeffs(const struct WcTensor *t, double *out, size_t len);

/**
 * `E[I_n(f)²]` and `E[I_n(f)⁴]`.
 *
 * # Safety
 * `t` must be a live tensor handle; outputs writable.
 */
enum WcStatus wc_tensor_moments(const struct WcTensor *t, double *second, double *fourth);

/**
 * `‖f ⊗_p f‖²`.
 *
 * # Safety
 * `t` must be a live tensor handle; `out` writable.
 */
enum WcStatus wc_tensor_contraction_norm_sq(const struct WcTensor *t, size_t p, double *out);

/**
 * `I_n(f)` at the Gaussian coordinates `xi`.
 *
 * # Safety
 * `xi` must hold `len` values; `out` writable.
 */
enum WcStatus wc_eval_integral(const struct WcTensor *t, const double *xi, size_t len, double *out);

/**
 * Builds the embedded statistic of `functional` on a grid with `cells`
 * cells (per axis for the sheet).
 *
 * # Safety
 * `functional` must be readable; `out` writable.
 */
enum WcStatus wc_plan_new(const struct WcFunctional *functional,
                          enum WcGridKind grid,
                          size_t cells,
                          struct WcPlan **out);

/**
 * # Safety
 * `p` must come from [`wc_plan_new`] and not be used afterwards.
 */
void wc_plan_free(struct WcPlan *p);

/**
 * # Safety
 * `p` must be a live plan handle; `out` writable.
 */
enum WcStatus wc_plan_moments(const struct WcPlan *p, struct WcPlanMoments *out);

/**
 * Normalized statistic at the generator coordinates `xi`
 * (`len` = generator count).
 *
 * # Safety
 * `xi` must hold `len` values; `out` writable.
 */
enum WcStatus wc_plan_statistic(const struct WcPlan *p, const double *xi, size_t len, double *out);

/**
 * `n` spectral draws of the normalized statistic; draw `i` depends only on
 * `(seed, tag, i)`.
 *
 * # Safety
 * `tag` must be a NUL-terminated string; `out` writable for `n` values.
 */
enum WcStatus wc_plan_sample(const struct WcPlan *p,
                             uint64_t seed,
                             const char *tag,
                             size_t n,
                             double *out);

/**
 * Continuum variance of the normalized `A_beta` statistic.
 *
 * # Safety
 * `betas` must hold `n` values; `out` writable.
 */
enum WcStatus wc_sheet_variance_a_beta(const double *betas, size_t n, double *out);

/**
 * Continuum variance of the normalized `B_eps` statistic.
 *
 * # Safety
 * `out` must be writable.
 */
enum WcStatus wc_sheet_variance_b_eps(size_t dims, double eps, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WIENER_CHAOS_H */
