#ifndef TEMPLATE_NULL_FFI_H
#define TEMPLATE_NULL_FFI_H

/* Generated by cbindgen from template-null-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum TnStatus {
  TN_OK = 0,
  TN_ERR_NULL_ARGUMENT = 1,
  TN_ERR_UTF8 = 2,
  TN_ERR_IO = 3,
  TN_ERR_PARSE = 4,
  TN_ERR_VALIDATION = 5,
  TN_ERR_DESIGN_MISMATCH = 6,
  TN_ERR_ARTIFACT = 7,
  TN_ERR_CONFIG = 8,
  TN_ERR_UNKNOWN_SUBJECT = 9,
} TnStatus;

// Opaque handle over a validated trial dataset.
typedef struct TnDataset TnDataset;

// Opaque handle over a loaded template distribution.
typedef struct TnTemplate TnTemplate;

// One assessment row. `decision_abnormal` is 1 when the null hypothesis
// of healthy scaling was rejected. `ci_defined` is 0 when no condition
// holds repeated trials; the interval fields are then NaN.
typedef struct TnAssessment {
  double scaling_factor;
  double delta_hat;
  double p_value;
  double post_hoc_power;
  double ci_lower;
  double ci_upper;
  int32_t decision_abnormal;
  int32_t ci_defined;
} TnAssessment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread; valid
// until the next failing call on the same thread. Never NULL.
const char *tn_last_error_message(void);

// Load a template artifact (JSON) from `path` into `*out`.
//
// # Safety
// `path` must be NUL-terminated or NULL; `out` must be a valid pointer.
enum TnStatus tn_template_load(const char *path, struct TnTemplate **out);

// Release a template handle. NULL is a no-op.
//
// # Safety
// `t` must come from `tn_template_load` and not be freed twice.
void tn_template_free(struct TnTemplate *t);

// Number of slope draws in the template, or 0 for NULL.
//
// # Safety
// `t` must be a live handle or NULL.
uintptr_t tn_template_len(const struct TnTemplate *t);

// Posterior benchmark of the healthy scaling factor (NaN for NULL).
//
// # Safety
// `t` must be a live handle or NULL.
double tn_template_benchmark_slope(const struct TnTemplate *t);

// Lower empirical quantile of the template at `level`.
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
enum TnStatus tn_template_critical_value(const struct TnTemplate *t, double level, double *out);

// Add-one empirical one-sided p-value of a slope under the template.
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
enum TnStatus tn_template_p_value(const struct TnTemplate *t, double beta_bar, double *out);

// Load and validate a trial CSV
// (`subject_id,weight_grams,trial,plfr,plfr_log`).
//
// # Safety
// `path` must be NUL-terminated or NULL; `out` must be a valid pointer.
enum TnStatus tn_dataset_load_csv(const char *path, struct TnDataset **out);

// Release a dataset handle. NULL is a no-op.
//
// # Safety
// `d` must come from `tn_dataset_load_csv` and not be freed twice.
void tn_dataset_free(struct TnDataset *d);

// Number of distinct subjects, or 0 for NULL.
//
// # Safety
// `d` must be a live handle or NULL.
uintptr_t tn_dataset_n_subjects(const struct TnDataset *d);

// Copy the `index`-th subject id (first-appearance order) into `buf` as
// a NUL-terminated string. Fails when the buffer is too small.
//
// # Safety
// `d` must be a live handle; `buf` must point to `buf_len` writable bytes.
enum TnStatus tn_dataset_subject_id(const struct TnDataset *d,
                                    uintptr_t index,
                                    char *buf,
                                    uintptr_t buf_len);

// Naive slope (log-N/ms per kg) of one subject's trials.
//
// # Safety
// `d` must be a live handle; `subject_id` NUL-terminated; `out` valid.
enum TnStatus tn_naive_slope(const struct TnDataset *d, const char *subject_id, double *out);

// Assess one subject against a template at test level `level`; `seed`
// drives the bootstrap interval.
//
// # Safety
// `t` and `d` must be live handles; `subject_id` NUL-terminated;
// `out` must point to a writable `TnAssessment`.
enum TnStatus tn_assess(const struct TnTemplate *t,
                        const struct TnDataset *d,
                        const char *subject_id,
                        double level,
                        uint64_t seed,
                        struct TnAssessment *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEMPLATE_NULL_FFI_H */
