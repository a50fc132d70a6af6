#ifndef SPTCL_H
#define SPTCL_H

#include <stddef.h>
#include <stdint.h>

typedef enum SptclKernel {
  /*
   Primal solver on raw features.
   */
  SPTCL_KERNEL_NONE = 0,
  SPTCL_KERNEL_LINEAR = 1,
  SPTCL_KERNEL_RBF = 2,
} SptclKernel;

typedef enum SptclAblation {
  SPTCL_ABLATION_FULL = 0,
  SPTCL_ABLATION_NO_SPL = 1,
  SPTCL_ABLATION_HARD_LABEL = 2,
} SptclAblation;

typedef enum SptclStatus {
  SPTCL_STATUS_OK = 0,
  SPTCL_STATUS_NULL_POINTER = 1,
  SPTCL_STATUS_INVALID_ARGUMENT = 2,
  /*
   Malformed or inconsistent input data.
   */
  SPTCL_STATUS_INVALID_DATA = 3,
  SPTCL_STATUS_IO = 4,
  /*
   The solver hit a singular system or non-finite value.
   */
  SPTCL_STATUS_NUMERICAL = 5,
  SPTCL_STATUS_PANIC = 6,
} SptclStatus;

/*
 Opaque feature matrix with optional labels.
 */
typedef struct SptclDataset SptclDataset;

/*
 Opaque fitted model, plus the diagnostics of the run that produced it.
 */
typedef struct SptclModel SptclModel;

typedef struct SptclHyperparams {
  double r;
  double eta;
  double rho;
  size_t k_neighbors;
  enum SptclKernel kernel;
  /*
   RBF bandwidth; any value `<= 0` selects the median heuristic.
   */
  double gamma;
  size_t outer_iters;
  size_t inner_iters;
  double inner_tol;
  double q_floor;
  uint64_t seed;
  enum SptclAblation ablation;
} SptclHyperparams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 The library defaults.
 */
struct SptclHyperparams sptcl_hyperparams_default(void);

/*
 Message for the last failed call on this thread, or null after a
 successful call. The pointer stays valid until the next call into the
 library on this thread.
 */
const char *sptcl_last_error_message(void);

/*
 Build a dataset from `n` samples of `dim` features. `labels` may be null;
 otherwise it holds `n` entries where `-1` marks an unlabeled sample.
 `class_count == 0` infers the count as the largest label plus one.

 # Safety
 `features` must point to `n * dim` doubles, `labels` (if non-null) to `n`
 integers, and `out` must be writable.
 */
enum SptclStatus sptcl_dataset_new(const double *features,
                                   size_t n,
                                   size_t dim,
                                   const int64_t *labels,
                                   size_t class_count,
                                   struct SptclDataset **out);

/*
 Load features (CSV or binary, detected from content) and, if
 `labels_path` is non-null, labels from a second file.

 # Safety
 Paths must be nul-terminated strings; `out` must be writable.
 */
enum SptclStatus sptcl_dataset_load(const char *features_path,
                                    const char *labels_path,
                                    size_t class_count,
                                    struct SptclDataset **out);

/*
 Number of samples, or 0 for a null handle.

 # Safety
 `ds` must be null or a live dataset handle.
 */
size_t sptcl_dataset_len(const struct SptclDataset *ds);

/*
 Feature dimension, or 0 for a null handle.

 # Safety
 `ds` must be null or a live dataset handle.
 */
size_t sptcl_dataset_dim(const struct SptclDataset *ds);

/*
 # Safety
 `ds` must be null or a handle not yet freed.
 */
void sptcl_dataset_free(struct SptclDataset *ds);

/*
 Fit on a fully labeled `source` and a `target` whose labels, if present,
 are used only for the per-iteration accuracy diagnostics.

 # Safety
 Handles must be live; `hp` must be null (defaults) or readable; `out`
 must be writable.
 */
enum SptclStatus sptcl_fit(const struct SptclDataset *source,
                           const struct SptclDataset *target,
                           const struct SptclHyperparams *hp,
                           struct SptclModel **out);

/*
 # Safety
 `model` must be null or a live model handle.
 */
size_t sptcl_model_class_count(const struct SptclModel *model);

/*
 # Safety
 `model` must be null or a live model handle.
 */
size_t sptcl_model_target_count(const struct SptclModel *model);

/*
 Copy the predicted target labels into `out`, which must have room for
 `len` entries with `len == sptcl_model_target_count(model)`.

 # Safety
 `model` must be live and `out` must hold `len` writable entries.
 */
enum SptclStatus sptcl_model_target_predictions(const struct SptclModel *model,
                                                size_t *out,
                                                size_t len);

/*
 Predict `n` new samples. `labels_out` receives `n` labels; `probs_out`,
 if non-null, receives `n * class_count` probabilities, sample-major.

 # Safety
 `features` must hold `n * dim` doubles; output buffers must be sized as
 described.
 */
enum SptclStatus sptcl_model_predict(const struct SptclModel *model,
                                     const double *features,
                                     size_t n,
                                     size_t dim,
                                     size_t *labels_out,
                                     double *probs_out);

/*
 Per-iteration diagnostics as JSON lines. Free with [`sptcl_string_free`].

 # Safety
 `model` must be live and `out` writable.
 */
enum SptclStatus sptcl_model_records_json(const struct SptclModel *model, char **out);

/*
 Serialize the model as JSON, the same format the CLI writes.

 # Safety
 `model` must be live and `out` writable.
 */
enum SptclStatus sptcl_model_to_json(const struct SptclModel *model, char **out);

/*
 Load a model from JSON. The resulting handle carries no run diagnostics.

 # Safety
 `json` must be a nul-terminated string; `out` must be writable.
 */
enum SptclStatus sptcl_model_from_json(const char *json, struct SptclModel **out);

/*
 # Safety
 `model` must be null or a handle not yet freed.
 */
void sptcl_model_free(struct SptclModel *model);

/*
 Release a string returned by this library.

 # Safety
 `s` must be null or a string from this library not yet freed.
 */
void sptcl_string_free(char *s);

/*
 Flip each of `n` labels with probability `p_noise` to a uniformly chosen
 other class. `mask_out`, if non-null, receives 1 for flipped entries.

 # Safety
 `labels` must hold `n` readable entries and `labels_out` `n` writable
 entries; `mask_out` must be null or hold `n` writable bytes.
 */
enum SptclStatus sptcl_inject_label_noise(const size_t *labels,
                                          size_t n,
                                          size_t class_count,
                                          double p_noise,
                                          uint64_t seed,
                                          size_t *labels_out,
                                          uint8_t *mask_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPTCL_H */
