#ifndef CLOSEDENV_H
#define CLOSEDENV_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2 to 5 match the command-line exit codes.
 */
typedef enum CeStatus {
  CE_STATUS_OK = 0,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  CE_STATUS_INVALID_ARGUMENT = 1,
  CE_STATUS_CONFIG = 2,
  CE_STATUS_IO = 3,
  CE_STATUS_DIVERGENCE = 4,
  CE_STATUS_METRIC = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  CE_STATUS_INTERNAL = 6,
} CeStatus;

typedef enum CeRole {
  CE_ROLE_TRAIN = 0,
  CE_ROLE_TEST = 1,
  CE_ROLE_USER = 2,
} CeRole;

/**
 * Opaque labeled dataset.
 */
typedef struct CeDataset CeDataset;

/**
 * Opaque fitted sanitizer.
 */
typedef struct CeSanitizer CeSanitizer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *ce_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ce_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void ce_string_free(char *s);

/**
 * Reads a CSV dataset (`feature_0..feature_{d-1}[,t,s]`).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum CeStatus ce_dataset_load_csv(const char *path, enum CeRole role, struct CeDataset **out);

/**
 * Writes a dataset as CSV.
 *
 * # Safety
 * `ds` must be a live handle and `path` a NUL-terminated string.
 */
enum CeStatus ce_dataset_save_csv(const struct CeDataset *ds, const char *path);

/**
 * Builds a dataset from a row-major `rows x dim` feature array. `t` and
 * `s` may both be null (unlabeled user data) or both point to `rows`
 * labels; `s` entries must be +1 or -1.
 *
 * # Safety
 * Non-null pointers must reference arrays of the stated sizes.
 */
enum CeStatus ce_dataset_from_arrays(const double *features,
                                     size_t rows,
                                     size_t dim,
                                     const int64_t *t,
                                     const int8_t *s,
                                     enum CeRole role,
                                     struct CeDataset **out);

/**
 * Number of records, 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t ce_dataset_len(const struct CeDataset *ds);

/**
 * Feature dimension, 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t ce_dataset_dim(const struct CeDataset *ds);

/**
 * Copies record `index`'s features into `out` (`dim` values).
 *
 * # Safety
 * `out` must have room for `ce_dataset_dim(ds)` values.
 */
enum CeStatus ce_dataset_features(const struct CeDataset *ds, size_t index, double *out);

/**
 * # Safety
 * `ds` must be null or a handle not used afterwards.
 */
void ce_dataset_free(struct CeDataset *ds);

/**
 * Generates the synthetic train, test and user sets. `config_json` may be
 * null for defaults.
 *
 * # Safety
 * The out pointers must be writable.
 */
enum CeStatus ce_generate_synthetic(const char *config_json,
                                    struct CeDataset **train,
                                    struct CeDataset **test,
                                    struct CeDataset **user);

/**
 * Fits a sanitizer. `env_json` holds environment settings and
 * `sanitizer_json` the method and its parameters; null means defaults.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum CeStatus ce_sanitizer_fit(const struct CeDataset *train,
                               const struct CeDataset *test,
                               const char *env_json,
                               const char *sanitizer_json,
                               struct CeSanitizer **out);

/**
 * Loads a saved sanitizer. MMD sanitizers need the training set they were
 * fitted on; `train` may be null otherwise.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum CeStatus ce_sanitizer_from_json(const char *json,
                                     const struct CeDataset *train,
                                     struct CeSanitizer **out);

/**
 * Serializes a sanitizer; release the string with [`ce_string_free`].
 *
 * # Safety
 * `san` must be live and `out` writable.
 */
enum CeStatus ce_sanitizer_to_json(const struct CeSanitizer *san, char **out);

/**
 * Applies `f` to one feature vector of length `dim`.
 *
 * # Safety
 * `x` and `out` must hold `dim` values.
 */
enum CeStatus ce_sanitizer_apply(const struct CeSanitizer *san,
                                 const double *x,
                                 size_t dim,
                                 uint64_t sample_seed,
                                 double *out);

/**
 * Sanitizes every record of `ds` into a new dataset.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum CeStatus ce_sanitizer_apply_dataset(const struct CeSanitizer *san,
                                         const struct CeDataset *ds,
                                         struct CeDataset **out);

/**
 * # Safety
 * `san` must be null or a handle not used afterwards.
 */
void ce_sanitizer_free(struct CeSanitizer *san);

/**
 * Trains the environment, applies `san` (identity when null) and writes
 * the JSON report to `out`. `user` may be null.
 *
 * # Safety
 * Non-null handles must be live and `out` writable.
 */
enum CeStatus ce_certify(const struct CeDataset *train,
                         const struct CeDataset *test,
                         const struct CeDataset *user,
                         const struct CeSanitizer *san,
                         const char *env_json,
                         char **out);

/**
 * Cosine similarity of two vectors of length `dim`.
 *
 * # Safety
 * `a` and `b` must hold `dim` values and `out` be writable.
 */
enum CeStatus ce_cosine_score(const double *a, const double *b, size_t dim, double *out);

/**
 * ROC AUC of positive against negative scores, ties counted half.
 *
 * # Safety
 * The arrays must hold the stated counts and `out` be writable.
 */
enum CeStatus ce_roc_auc(const double *positive,
                         size_t positive_len,
                         const double *negative,
                         size_t negative_len,
                         double *out);

/**
 * `1 - 2 |accuracy - 0.5|`.
 */
double ce_privacy_term(double sensitive_accuracy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLOSEDENV_H */
