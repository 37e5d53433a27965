#ifndef SMNMIX_H
#define SMNMIX_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SmnStatus {
  SMN_STATUS_OK = 0,
  SMN_STATUS_INVALID_INPUT = 1,
  SMN_STATUS_DATA_ERROR = 2,
  SMN_STATUS_NUMERICAL_FAILURE = 3,
  SMN_STATUS_NULL_POINTER = 4,
  SMN_STATUS_PANIC = 5,
} SmnStatus;

/**
 * Dataset handle.
 */
typedef struct SmnDataset SmnDataset;

/**
 * Fitted chain handle.
 */
typedef struct SmnFit SmnFit;

/**
 * Run settings of [`smn_fit`]; obtain defaults from [`smn_sampler_options_default`].
 */
typedef struct SmnSamplerOptions {
  uint64_t seed;
  size_t iterations;
  size_t burn_in;
  size_t thin;
  size_t warmup_iters;
  double tau_t;
  double tau_s;
  /**
   * Dirichlet concentration shared by the three components.
   */
  double alpha;
} SmnSamplerOptions;

/**
 * Model comparison criteria of the selected model.
 */
typedef struct SmnCriteria {
  double lpml;
  double dic;
  double eaic;
  double ebic;
  double waic;
} SmnCriteria;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *smn_last_error(void);

/**
 * Build a dataset from `n` responses and a row-major `n × q` design.
 *
 * # Safety
 * `y` must point to `n` doubles, `x` to `n * q` doubles and `out` to a
 * writable handle slot.
 */
enum SmnStatus smn_dataset_new(const double *y,
                               const double *x,
                               size_t n,
                               size_t q,
                               struct SmnDataset **out);

/**
 * Mark rows left-censored: `flags[i] != 0` means `y_i` is only known to be
 * at most `kappa[i]` (and must equal it).
 *
 * # Safety
 * `data` must be a live handle; `flags` and `kappa` must hold `n` entries.
 */
enum SmnStatus smn_dataset_set_censoring(struct SmnDataset *data,
                                         const uint8_t *flags,
                                         const double *kappa);

/**
 * # Safety
 * `data` must be null or a handle from [`smn_dataset_new`] not yet freed.
 */
void smn_dataset_free(struct SmnDataset *data);

struct SmnSamplerOptions smn_sampler_options_default(uint64_t seed);

/**
 * Fit the three-component mixture with default priors.
 *
 * # Safety
 * `data` must be a live dataset handle, `options` valid and `out` writable.
 */
enum SmnStatus smn_fit(const struct SmnDataset *data,
                       const struct SmnSamplerOptions *options,
                       struct SmnFit **out);

/**
 * # Safety
 * `fit` must be null or a handle from [`smn_fit`] not yet freed.
 */
void smn_fit_free(struct SmnFit *fit);

/**
 * Posterior model probabilities (Normal, Student-t, Slash) into `out[0..3]`.
 *
 * # Safety
 * `fit` must be a live handle and `out` must hold 3 doubles.
 */
enum SmnStatus smn_fit_rho_hat(const struct SmnFit *fit, double *out);

/**
 * Selected model number: 1 Normal, 2 Student-t, 3 Slash; 0 for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
int32_t smn_fit_selected_model(const struct SmnFit *fit);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t smn_fit_num_draws(const struct SmnFit *fit);

/**
 * Model-averaged posterior means of `β` (`len` must equal `q`) and `σ²`.
 *
 * # Safety
 * `fit` must be a live handle, `beta` must hold `len` doubles and `sigma2`
 * must be writable.
 */
enum SmnStatus smn_fit_posterior_means(const struct SmnFit *fit,
                                       double *beta,
                                       size_t len,
                                       double *sigma2);

/**
 * Criteria of the selected model evaluated on `data`.
 *
 * # Safety
 * `fit` and `data` must be live handles and `out` writable.
 */
enum SmnStatus smn_fit_criteria(const struct SmnFit *fit,
                                const struct SmnDataset *data,
                                struct SmnCriteria *out);

/**
 * Write the kept draws as CSV to the UTF-8 path `path`.
 *
 * # Safety
 * `fit` must be a live handle and `path` a nul-terminated string.
 */
enum SmnStatus smn_fit_write_draws(const struct SmnFit *fit, const char *path);

/**
 * Slash df closest in KL divergence to the unit-variance Student-t with `nu_t` df.
 *
 * # Safety
 * `out` must be writable.
 */
enum SmnStatus smn_kl_match_slash_df(double nu_t, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMNMIX_H */
