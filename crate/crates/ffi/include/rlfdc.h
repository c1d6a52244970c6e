#ifndef RLFDC_H
#define RLFDC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum RlfdcStatus {
  RLFDC_STATUS_OK = 0,
  RLFDC_STATUS_NULL_ARGUMENT = 1,
  RLFDC_STATUS_INVALID_UTF8 = 2,
  RLFDC_STATUS_IO = 3,
  RLFDC_STATUS_PARSE = 4,
  RLFDC_STATUS_INVALID_INPUT = 5,
  RLFDC_STATUS_MODEL = 6,
  RLFDC_STATUS_PANIC = 7,
} RlfdcStatus;

/**
 * A loaded dataset.
 */
typedef struct RlfdcDataset RlfdcDataset;

/**
 * A trained model. Safe to use from several threads at once.
 */
typedef struct RlfdcModel RlfdcModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rlfdc_version(void);

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated, truncated if needed). Returns the full message length
 * without the terminator, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t rlfdc_last_error(char *buf, size_t len);

/**
 * Loads a dataset document from `path`.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be a valid pointer.
 */
enum RlfdcStatus rlfdc_dataset_load(const char *path, struct RlfdcDataset **out);

/**
 * Parses a dataset document held in memory.
 *
 * # Safety
 * `json` must be a valid C string; `out` must be a valid pointer.
 */
enum RlfdcStatus rlfdc_dataset_from_json(const char *json, struct RlfdcDataset **out);

/**
 * # Safety
 * `dataset` must be null or a handle from this library, freed at most once.
 */
void rlfdc_dataset_free(struct RlfdcDataset *dataset);

/**
 * # Safety
 * `dataset` must be a valid handle.
 */
size_t rlfdc_dataset_num_tests(const struct RlfdcDataset *dataset);

/**
 * # Safety
 * `dataset` must be a valid handle.
 */
size_t rlfdc_dataset_num_methods(const struct RlfdcDataset *dataset);

/**
 * # Safety
 * `dataset` must be a valid handle.
 */
size_t rlfdc_dataset_num_elements(const struct RlfdcDataset *dataset);

/**
 * Loads a model document from `path`.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be a valid pointer.
 */
enum RlfdcStatus rlfdc_model_load(const char *path, struct RlfdcModel **out);

/**
 * Saves a model document to `path`.
 *
 * # Safety
 * `model` must be a valid handle and `path` a valid C string.
 */
enum RlfdcStatus rlfdc_model_save(const struct RlfdcModel *model, const char *path);

/**
 * Trains a model with default hyperparameters on `count` datasets.
 *
 * # Safety
 * `datasets` must point to `count` valid handles; `out` must be valid.
 */
enum RlfdcStatus rlfdc_model_train(const struct RlfdcDataset *const *datasets,
                                   size_t count,
                                   size_t epochs,
                                   uint64_t seed,
                                   struct RlfdcModel **out);

/**
 * # Safety
 * `model` must be null or a handle from this library, freed at most once.
 */
void rlfdc_model_free(struct RlfdcModel *model);

/**
 * Predicted FDC of `candidate` for the suite made of the dataset's initial
 * failing test plus the `selected` tests.
 *
 * # Safety
 * Handles must be valid; `selected` must point to `selected_len` ids;
 * `out` must be valid.
 */
enum RlfdcStatus rlfdc_predict_fdc(const struct RlfdcModel *model,
                                   const struct RlfdcDataset *dataset,
                                   const size_t *selected,
                                   size_t selected_len,
                                   size_t candidate,
                                   double *out);

/**
 * Greedy selection of `k` tests under `metric` (`"rlfdc"`, `"tfd"`, ...).
 * `model` is required for `"rlfdc"` and ignored otherwise; `alpha` is used
 * by metrics that take one and ignored otherwise; `seed` drives
 * `"random"`. Writes the selected ids to `out_selected` and the best buggy
 * rank after each step (`k + 1` values, step 0 first) to `out_ranks`.
 *
 * # Safety
 * Handles must be valid or null as described; `metric` must be a valid C
 * string; `out_selected` must have room for `k` values and `out_ranks`
 * for `k + 1`.
 */
enum RlfdcStatus rlfdc_select(const struct RlfdcDataset *dataset,
                              const char *metric,
                              const struct RlfdcModel *model,
                              double alpha,
                              uint64_t seed,
                              size_t k,
                              size_t *out_selected,
                              size_t *out_ranks);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RLFDC_H */
