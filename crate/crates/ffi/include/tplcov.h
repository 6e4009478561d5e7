#ifndef TPLCOV_H
#define TPLCOV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TplcovStatus {
  TPLCOV_STATUS_OK = 0,
  TPLCOV_STATUS_ARGUMENT_ERROR = 1,
  TPLCOV_STATUS_DATA_ERROR = 2,
  TPLCOV_STATUS_DOMAIN_ERROR = 3,
  TPLCOV_STATUS_NUMERIC_ERROR = 4,
  TPLCOV_STATUS_NOT_CONVERGED = 5,
  TPLCOV_STATUS_GENERATION_ERROR = 6,
  TPLCOV_STATUS_NULL_POINTER = 7,
  TPLCOV_STATUS_BUFFER_TOO_SMALL = 8,
  TPLCOV_STATUS_PANIC = 9,
} TplcovStatus;

/**
 * Covariance pattern for [`tplcov_simulate`].
 */
typedef enum TplcovStructure {
  TPLCOV_STRUCTURE_BLOCK_DIAGONAL = 0,
  TPLCOV_STRUCTURE_SPARSE_RANDOM = 1,
} TplcovStructure;

/**
 * An `n x p` data matrix.
 */
typedef struct TplcovData TplcovData;

/**
 * A fitted sparse covariance estimate.
 */
typedef struct TplcovFit TplcovFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *tplcov_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tplcov_version(void);

/**
 * Copy `n * p` row-major values into a new data handle.
 */
enum TplcovStatus tplcov_data_new(const double *values,
                                  size_t n,
                                  size_t p,
                                  struct TplcovData **out);

void tplcov_data_free(struct TplcovData *data);

enum TplcovStatus tplcov_data_dims(const struct TplcovData *data, size_t *n, size_t *p);

/**
 * Copy the data values, row-major, into `buf` of length at least `n * p`.
 */
enum TplcovStatus tplcov_data_values(const struct TplcovData *data, double *buf, size_t len);

/**
 * Fit with the penalty chosen by the chi-square rule at level `alpha`.
 */
enum TplcovStatus tplcov_estimate_alpha(const struct TplcovData *data,
                                        double alpha,
                                        bool center,
                                        struct TplcovFit **out);

/**
 * Fit at a fixed penalty `lambda`.
 */
enum TplcovStatus tplcov_estimate_lambda(const struct TplcovData *data,
                                         double lambda,
                                         bool center,
                                         struct TplcovFit **out);

void tplcov_fit_free(struct TplcovFit *fit);

/**
 * Dimension `p` of the estimate, or 0 for a null handle.
 */
size_t tplcov_fit_dim(const struct TplcovFit *fit);

/**
 * Copy the `p x p` estimate, row-major, into `buf`.
 */
enum TplcovStatus tplcov_fit_theta(const struct TplcovFit *fit, double *buf, size_t len);

enum TplcovStatus tplcov_fit_lambda(const struct TplcovFit *fit, double *out);

enum TplcovStatus tplcov_fit_kkt_residual(const struct TplcovFit *fit, double *out);

enum TplcovStatus tplcov_fit_converged(const struct TplcovFit *fit, bool *out);

enum TplcovStatus tplcov_fit_support_size(const struct TplcovFit *fit, size_t *out);

/**
 * Write the selected pairs as 1-based `(j, k)` couples, `j < k`, into
 * `buf` of length at least twice the support size.
 */
enum TplcovStatus tplcov_fit_support(const struct TplcovFit *fit, size_t *buf, size_t len);

/**
 * Upper `alpha` quantile of the chi-square distribution with one degree of freedom.
 */
enum TplcovStatus tplcov_chisq1_quantile(double alpha, double *out);

/**
 * Draw a covariance of the given structure and `n` observations from it.
 * When `theta` is non-null the true covariance is copied into it
 * (row-major, `theta_len >= p * p`).
 */
enum TplcovStatus tplcov_simulate(enum TplcovStructure structure,
                                  size_t p,
                                  size_t n,
                                  double tau,
                                  uint64_t seed,
                                  struct TplcovData **data_out,
                                  double *theta,
                                  size_t theta_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TPLCOV_H */
