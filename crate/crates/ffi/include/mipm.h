#ifndef MIPM_H
#define MIPM_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MipmStatus {
  MIPM_STATUS_OK = 0,
  MIPM_STATUS_NULL_POINTER = 1,
  MIPM_STATUS_INVALID_INPUT = 2,
  MIPM_STATUS_NOT_M_MATRIX = 3,
  MIPM_STATUS_NOT_CONVERGED = 4,
  MIPM_STATUS_LEMMA_VIOLATION = 5,
  MIPM_STATUS_IO = 6,
  MIPM_STATUS_PANIC = 7,
} MipmStatus;

/**
 * A certified symmetric M-matrix.
 */
typedef struct MipmMatrix MipmMatrix;

typedef struct MipmQpResult MipmQpResult;

typedef struct MipmScaleResult MipmScaleResult;

/**
 * Solver settings. Obtain defaults from [`mipm_config_default`].
 */
typedef struct MipmConfig {
  double epsilon;
  double center_tol;
  double cg_rel_tol;
  /**
   * 0 selects `20 n + 200`.
   */
  size_t cg_max_iters;
  size_t max_correctors;
  double step_coeff;
  double ls_window_lo;
  double ls_window_hi;
  double threshold_coeff;
  /**
   * 0 off, 1 soft, 2 assert.
   */
  uint32_t diagnostics_level;
} MipmConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Empty after a success.
 * The pointer stays valid until the next call into this library.
 */
const char *mipm_last_error_message(void);

const char *mipm_version(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum MipmStatus mipm_config_default(struct MipmConfig *out);

/**
 * Builds and certifies a matrix from full symmetric CSR arrays.
 *
 * # Safety
 * `row_starts` must hold `n + 1` entries, and `col_indices` and `values`
 * must hold `row_starts[n]` entries each. `out` must be valid for writes.
 */
enum MipmStatus mipm_matrix_from_csr(size_t n,
                                     const size_t *row_starts,
                                     const size_t *col_indices,
                                     const double *values,
                                     struct MipmMatrix **out);

/**
 * Reads and certifies a Matrix Market file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum MipmStatus mipm_matrix_read_mtx(const char *path, struct MipmMatrix **out);

/**
 * # Safety
 * `m` must be null or a handle from this library that was not yet freed.
 */
void mipm_matrix_free(struct MipmMatrix *m);

/**
 * Dimension of `m`, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t mipm_matrix_dim(const struct MipmMatrix *m);

/**
 * Certified estimate of the smallest eigenvalue, or NaN for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
double mipm_matrix_lambda_min(const struct MipmMatrix *m);

/**
 * Computes `x > 0` with `||X A X 1 - 1||_2 <= cfg.epsilon`. A null `cfg`
 * uses the defaults.
 *
 * # Safety
 * `m` must be a live handle, `cfg` null or valid, `out` valid for writes.
 */
enum MipmStatus mipm_scale(const struct MipmMatrix *m,
                           const struct MipmConfig *cfg,
                           struct MipmScaleResult **out);

/**
 * Copies the scaling vector into `buf`, which must hold `len == n` values.
 *
 * # Safety
 * `r` must be a live handle and `buf` valid for `len` writes.
 */
enum MipmStatus mipm_scale_result_x(const struct MipmScaleResult *r, double *buf, size_t len);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
double mipm_scale_result_residual(const struct MipmScaleResult *r);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
size_t mipm_scale_result_iterations(const struct MipmScaleResult *r);

/**
 * # Safety
 * `r` must be null or a live handle that was not yet freed.
 */
void mipm_scale_result_free(struct MipmScaleResult *r);

/**
 * Minimizes `1/2 x^T A x - b^T x` over `x >= 0` to additive error
 * `cfg.epsilon`.
 *
 * # Safety
 * `m` must be a live handle, `b` valid for `len` reads, `cfg` null or
 * valid, `out` valid for writes.
 */
enum MipmStatus mipm_qp(const struct MipmMatrix *m,
                        const double *b,
                        size_t len,
                        const struct MipmConfig *cfg,
                        struct MipmQpResult **out);

/**
 * # Safety
 * `r` must be a live handle and `buf` valid for `len` writes.
 */
enum MipmStatus mipm_qp_result_x(const struct MipmQpResult *r, double *buf, size_t len);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
double mipm_qp_result_objective(const struct MipmQpResult *r);

/**
 * Upper bound `mu n` on the distance to the optimal objective.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
double mipm_qp_result_gap_bound(const struct MipmQpResult *r);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
size_t mipm_qp_result_iterations(const struct MipmQpResult *r);

/**
 * # Safety
 * `r` must be null or a live handle that was not yet freed.
 */
void mipm_qp_result_free(struct MipmQpResult *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIPM_H */
