#ifndef SFDE_H
#define SFDE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

enum SfdeStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  SFDE_STATUS_OK = 0,
  SFDE_STATUS_NULL_POINTER = 1,
  SFDE_STATUS_INVALID_UTF8 = 2,
  SFDE_STATUS_CONFIG = 3,
  SFDE_STATUS_DOMAIN = 4,
  SFDE_STATUS_NUMERICAL = 5,
  SFDE_STATUS_IO = 6,
  SFDE_STATUS_USAGE = 7,
  SFDE_STATUS_OUT_OF_RANGE = 8,
  SFDE_STATUS_PANIC = 9,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SfdeStatus SfdeStatus;
#else
typedef int32_t SfdeStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum SfdeTail
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  SFDE_TAIL_CONSTANT = 0,
  SFDE_TAIL_ZERO = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SfdeTail SfdeTail;
#else
typedef int32_t SfdeTail;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum SfdeMeasure
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  SFDE_MEASURE_P = 0,
  SFDE_MEASURE_Q = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SfdeMeasure SfdeMeasure;
#else
typedef int32_t SfdeMeasure;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

typedef struct SfdeCoupled SfdeCoupled;

typedef struct SfdeModel SfdeModel;

typedef struct SfdeSegment SfdeSegment;

typedef struct SfdeTrajectory SfdeTrajectory;

// Result of `sfde_hamiltonian_constants`.
typedef struct SfdeHamiltonianConstants {
  double p0;
  double alpha0;
  double log_lambda;
  double lambda;
  double mu;
  double threshold;
  double c_beta;
} SfdeHamiltonianConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error of this thread into `buf` (NUL-terminated, truncated
// to `len`). Returns the full message length plus one, or 0 if no error has
// been recorded.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
uintptr_t sfde_last_error(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *sfde_version(void);

// Build a model from its JSON definition.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
SfdeStatus sfde_model_from_json(const char *json, struct SfdeModel **out);

// # Safety
// `model` must come from `sfde_model_from_json` and not be used afterwards.
void sfde_model_free(struct SfdeModel *model);

// # Safety
// Pointers must be valid.
SfdeStatus sfde_model_dim(const struct SfdeModel *model, uintptr_t *out);

// # Safety
// Pointers must be valid.
SfdeStatus sfde_model_rate(const struct SfdeModel *model, double *out);

// Segment from `rows` rows of `dim` values; row `k` holds `ξ(-k·dt)`.
// `tail` is an [`SfdeTail`] value.
//
// # Safety
// `values` must hold `dim * rows` doubles.
SfdeStatus sfde_segment_new(uintptr_t dim,
                            double dt,
                            const double *values,
                            uintptr_t rows,
                            int32_t tail,
                            struct SfdeSegment **out);

// Constant segment over `steps` grid steps with a constant tail.
//
// # Safety
// `value` must hold `dim` doubles.
SfdeStatus sfde_segment_constant(const double *value,
                                 uintptr_t dim,
                                 double dt,
                                 uintptr_t steps,
                                 struct SfdeSegment **out);

// # Safety
// `seg` must come from a segment constructor and not be used afterwards.
void sfde_segment_free(struct SfdeSegment *seg);

// `sup_{θ≤0} e^{rθ}|ξ(θ)|`, tail included.
//
// # Safety
// Pointers must be valid.
SfdeStatus sfde_weighted_norm(const struct SfdeSegment *seg, double rate, double *out);

// One Euler–Maruyama path with Gaussian noise from `seed`. Matches path 0
// of the command-line `simulate`.
//
// # Safety
// Pointers must be valid.
SfdeStatus sfde_simulate(const struct SfdeModel *model,
                         const struct SfdeSegment *xi,
                         double dt,
                         double horizon,
                         uint64_t seed,
                         struct SfdeTrajectory **out);

// # Safety
// `tr` must come from `sfde_simulate` and not be used afterwards.
void sfde_trajectory_free(struct SfdeTrajectory *tr);

// # Safety
// Pointers must be valid.
SfdeStatus sfde_trajectory_len(const struct SfdeTrajectory *tr, uintptr_t *out);

// Nonzero if the path hit the stopping radius.
//
// # Safety
// Pointers must be valid.
SfdeStatus sfde_trajectory_stopped(const struct SfdeTrajectory *tr, int32_t *out);

// Row `index`: time, state (`dim` doubles) and running norm. Any output
// pointer may be null.
//
// # Safety
// `x` must be null or hold the model dimension.
SfdeStatus sfde_trajectory_row(const struct SfdeTrajectory *tr,
                               uintptr_t index,
                               double *t,
                               double *x,
                               double *norm);

// Coupled pair from `(ξ, η)`. A NaN `lambda` selects the model default;
// `measure` is an [`SfdeMeasure`] value.
//
// # Safety
// Pointers must be valid.
SfdeStatus sfde_couple(const struct SfdeModel *model,
                       const struct SfdeSegment *xi,
                       const struct SfdeSegment *eta,
                       double lambda,
                       int32_t measure,
                       double dt,
                       double horizon,
                       uint64_t seed,
                       struct SfdeCoupled **out);

// # Safety
// `c` must come from `sfde_couple` and not be used afterwards.
void sfde_coupled_free(struct SfdeCoupled *c);

// # Safety
// Pointers must be valid.
SfdeStatus sfde_coupled_len(const struct SfdeCoupled *c, uintptr_t *out);

// Row `index`: time, both states, log-density and `‖X_t - Y_t‖_r`. Any
// output pointer may be null.
//
// # Safety
// `x` and `y` must be null or hold the model dimension.
SfdeStatus sfde_coupled_row(const struct SfdeCoupled *c,
                            uintptr_t index,
                            double *t,
                            double *x,
                            double *y,
                            double *log_r,
                            double *z_norm);

// `ln Λ(p, α)`.
//
// # Safety
// `out` must be writable.
SfdeStatus sfde_log_lambda_p_alpha(double p, double alpha, double *out);

// `Λ(p, α)`; may overflow to infinity where the logarithm is finite.
//
// # Safety
// `out` must be writable.
SfdeStatus sfde_lambda_p_alpha(double p, double alpha, double *out);

// Minimiser of `Λ` over the default grid and the derived Hamiltonian
// constants.
//
// # Safety
// `out` must be writable.
SfdeStatus sfde_hamiltonian_constants(double l1,
                                      double l2,
                                      double beta,
                                      double r,
                                      struct SfdeHamiltonianConstants *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFDE_H */
