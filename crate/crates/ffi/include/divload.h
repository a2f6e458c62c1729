#ifndef DIVLOAD_H
#define DIVLOAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Search strategy of the recursive solver.
 */
typedef enum {
  DIVLOAD_MODE_BISECTION = 0,
  DIVLOAD_MODE_SWEEP_DOWN = 1,
} DivloadMode;

/**
 * Result code of every fallible call.
 */
typedef enum {
  DIVLOAD_STATUS_OK = 0,
  DIVLOAD_STATUS_NULL_POINTER = 1,
  DIVLOAD_STATUS_INVALID_ARGUMENT = 2,
  DIVLOAD_STATUS_INVALID_PROFILE = 3,
  DIVLOAD_STATUS_INVALID_SPEC = 4,
  DIVLOAD_STATUS_INFEASIBLE = 5,
  DIVLOAD_STATUS_NO_BRACKET = 6,
  DIVLOAD_STATUS_NON_MONOTONE = 7,
  DIVLOAD_STATUS_BUFFER_TOO_SMALL = 8,
  DIVLOAD_STATUS_PANIC = 99,
} DivloadStatus;

/**
 * Network description: base speeds, load constants and control mode.
 */
typedef struct DivloadNetwork DivloadNetwork;

/**
 * Piecewise-constant inverse-speed profile.
 */
typedef struct DivloadProfile DivloadProfile;

/**
 * Load fractions, stage times and finishing time.
 */
typedef struct DivloadSchedule DivloadSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *divload_last_error_message(void);

/**
 * Creates a network with `n_w = N + 1` computing and `n_z = N` link
 * inverse speeds. `time_varying_control` nonzero lets `P_0` and the links
 * vary over time.
 *
 * # Safety
 * `base_w` and `base_z` must point to `n_w` and `n_z` doubles; `out` must be writable.
 */
DivloadStatus divload_network_new(const double *base_w,
                                  size_t n_w,
                                  const double *base_z,
                                  size_t n_z,
                                  double t_cp,
                                  double t_cm,
                                  int32_t time_varying_control,
                                  DivloadNetwork **out);

/**
 * # Safety
 * `network` must come from [`divload_network_new`] and not be freed twice.
 */
void divload_network_free(DivloadNetwork *network);

/**
 * Creates a profile taking `values[k]` on `[breakpoints[k], breakpoints[k + 1])`.
 *
 * # Safety
 * `breakpoints` and `values` must point to `len` doubles; `out` must be writable.
 */
DivloadStatus divload_profile_new(const double *breakpoints,
                                  const double *values,
                                  size_t len,
                                  DivloadProfile **out);

/**
 * # Safety
 * `profile` must come from [`divload_profile_new`] and not be freed twice.
 */
void divload_profile_free(DivloadProfile *profile);

/**
 * Equivalent constant inverse speed of `profile` over `[start, end]`.
 *
 * # Safety
 * `profile` must be a live handle and `out` writable.
 */
DivloadStatus divload_profile_equivalent(const DivloadProfile *profile,
                                         double start,
                                         double end,
                                         double *out);

/**
 * Closed-form schedule at the network's base speeds.
 *
 * # Safety
 * `network` must be a live handle and `out` writable.
 */
DivloadStatus divload_solve_time_invariant(const DivloadNetwork *network, DivloadSchedule **out);

/**
 * Recursive solve with time-varying profiles: `w` holds `N + 1` computing
 * profiles and `z` holds `N` link profiles. Under a time-invariant control
 * processor `w[0]` and every `z` must be constant.
 *
 * # Safety
 * `network` must be live, `w` and `z` must point to `n_w` and `n_z` live
 * profile handles, and `out` must be writable.
 */
DivloadStatus divload_solve(const DivloadNetwork *network,
                            const DivloadProfile *const *w,
                            size_t n_w,
                            const DivloadProfile *const *z,
                            size_t n_z,
                            DivloadMode mode,
                            DivloadSchedule **out);

/**
 * Largest per-processor residual of a slot-level replay of `schedule`.
 *
 * # Safety
 * Same handle rules as [`divload_solve`]; `out` must be writable.
 */
DivloadStatus divload_replay_residual(const DivloadSchedule *schedule,
                                      const DivloadNetwork *network,
                                      const DivloadProfile *const *w,
                                      size_t n_w,
                                      const DivloadProfile *const *z,
                                      size_t n_z,
                                      double slot,
                                      double *out);

/**
 * # Safety
 * `schedule` must come from a solver call and not be freed twice.
 */
void divload_schedule_free(DivloadSchedule *schedule);

/**
 * Finishing time, or NaN for a null handle.
 *
 * # Safety
 * `schedule` must be null or a live handle.
 */
double divload_schedule_finish_time(const DivloadSchedule *schedule);

/**
 * Number of processors `N + 1`, or 0 for a null handle.
 *
 * # Safety
 * `schedule` must be null or a live handle.
 */
size_t divload_schedule_processor_count(const DivloadSchedule *schedule);

/**
 * Copies the `N + 1` load fractions into `out`.
 *
 * # Safety
 * `schedule` must be live and `out` must point to `len` writable doubles.
 */
DivloadStatus divload_schedule_fractions(const DivloadSchedule *schedule, double *out, size_t len);

/**
 * Copies the `N` stage times (end of each worker's communication) into `out`.
 *
 * # Safety
 * `schedule` must be live and `out` must point to `len` writable doubles.
 */
DivloadStatus divload_schedule_stage_times(const DivloadSchedule *schedule,
                                           double *out,
                                           size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIVLOAD_H */
