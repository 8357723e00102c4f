#ifndef ABPKIT_H
#define ABPKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AbpFormat {
  ABP_FORMAT_CSV = 0,
  ABP_FORMAT_JSON = 1,
} AbpFormat;

typedef enum AbpRunKind {
  ABP_RUN_KIND_SOBOLEV = 0,
  ABP_RUN_KIND_MICHAEL_SIMON = 1,
  ABP_RUN_KIND_TRANSPORT = 2,
  ABP_RUN_KIND_CONVERGENCE = 3,
} AbpRunKind;

typedef enum AbpStatus {
  ABP_STATUS_OK = 0,
  ABP_STATUS_NULL_POINTER = 1,
  ABP_STATUS_INVALID_UTF8 = 2,
  ABP_STATUS_INVALID_ARGUMENT = 3,
  ABP_STATUS_CONFIG = 4,
  ABP_STATUS_PROFILE_REJECTED = 5,
  ABP_STATUS_NUMERICAL = 6,
  ABP_STATUS_UNSUPPORTED = 7,
  ABP_STATUS_IO = 8,
  ABP_STATUS_PANIC = 9,
} AbpStatus;

// Opaque handle to a certified model manifold.
typedef struct AbpModel AbpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *abp_last_error(void);

// Volume of the Euclidean unit ball in dimension `k`.
double abp_unit_ball_volume(size_t k);

// Flat model of dimension `dim`.
enum AbpStatus abp_model_euclidean(size_t dim, struct AbpModel **out);

// Builds a model from a TOML table in the same form as `[case.manifold]`,
// for example `preset = "cone_smoothed"\nalpha = 0.5\ndim = 3`.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` a writable pointer.
enum AbpStatus abp_model_from_toml(const char *spec, struct AbpModel **out);

// # Safety
// `model` must be null or a handle not yet freed.
void abp_model_free(struct AbpModel *model);

enum AbpStatus abp_model_dim(const struct AbpModel *model, size_t *out);

// Asymptotic volume ratio of the model.
enum AbpStatus abp_model_theta(const struct AbpModel *model, double *out);

// Warping function at radius `r`.
enum AbpStatus abp_model_phi(const struct AbpModel *model, double r, double *out);

// Volume of the geodesic ball of radius `r` about the pole.
enum AbpStatus abp_model_ball_volume(const struct AbpModel *model, double r, double *out);

// Runs an experiment config given as TOML text and returns the report.
// Relative paths in the config resolve against the working directory.
// `*failed_rows` receives the number of rows with status `fail` (or failed
// convergence tables) and may be null. Release `*report` with
// [`abp_string_free`].
//
// # Safety
// `config` must be a NUL-terminated string and `report` a writable pointer.
enum AbpStatus abp_run_config(const char *config,
                              enum AbpRunKind kind,
                              enum AbpFormat format,
                              char **report,
                              size_t *failed_rows);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void abp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ABPKIT_H */
