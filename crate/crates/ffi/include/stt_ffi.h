#ifndef STT_FFI_H
#define STT_FFI_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call.
 */
typedef enum SttStatus {
  STT_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  STT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A value was out of range, a buffer too short or a string not UTF-8.
   */
  STT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The scenario text or file failed validation.
   */
  STT_STATUS_CONFIG = 3,
  STT_STATUS_INVALID_TASK = 4,
  /**
   * The task breaks an assumption the synthesis needs.
   */
  STT_STATUS_ASSUMPTION = 5,
  /**
   * No admissible detour exists for some obstacle.
   */
  STT_STATUS_INFEASIBLE = 6,
  STT_STATUS_SYNTHESIS_FAILURE = 7,
  /**
   * The state left the tube.
   */
  STT_STATUS_TUBE_VIOLATION = 8,
  STT_STATUS_PRECONDITION = 9,
  STT_STATUS_IO = 10,
  /**
   * Malformed tube file or serialization failure.
   */
  STT_STATUS_FORMAT = 11,
  /**
   * A Rust panic was caught at the boundary.
   */
  STT_STATUS_INTERNAL = 12,
} SttStatus;

/**
 * Opaque scenario handle.
 */
typedef struct SttScenario SttScenario;

/**
 * Opaque handle holding the planned detours and the integrated tube.
 */
typedef struct SttSynthesis SttSynthesis;

/**
 * Opaque closed-loop trace handle.
 */
typedef struct SttTrace SttTrace;

typedef struct SttFlags {
  bool reached;
  bool safe;
  bool contained;
  bool stayed;
} SttFlags;

typedef struct SttEffort {
  double energy;
  double peak;
  double l1;
} SttEffort;

/**
 * Smooth tube against the reconstructed abrupt baseline. Ratios are
 * smooth / baseline.
 */
typedef struct SttComparison {
  struct SttEffort smooth;
  struct SttEffort baseline;
  double energy_ratio;
  double peak_ratio;
  double l1_ratio;
  bool smooth_wins;
} SttComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *stt_version(void);

/**
 * Message of the last failing call on this thread, or null if there is none.
 * The pointer stays valid until the next failing call or
 * [`stt_clear_last_error`] on the same thread.
 */
const char *stt_last_error_message(void);

void stt_clear_last_error(void);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SttStatus stt_scenario_load(const char *path, struct SttScenario **out);

/**
 * Parses scenario text. `name` labels error messages and outputs and may be
 * null.
 *
 * # Safety
 * `text` and a non-null `name` must be NUL-terminated strings; `out` must be
 * a valid pointer.
 */
enum SttStatus stt_scenario_parse(const char *text, const char *name, struct SttScenario **out);

/**
 * # Safety
 * `sc` must be null or a handle from this library not yet freed.
 */
void stt_scenario_free(struct SttScenario *sc);

/**
 * Full state dimension, 0 for a null handle.
 *
 * # Safety
 * `sc` must be null or a live scenario handle.
 */
size_t stt_scenario_state_dim(const struct SttScenario *sc);

/**
 * Prescribed completion time `t_c`, NaN for a null handle.
 *
 * # Safety
 * `sc` must be null or a live scenario handle.
 */
double stt_scenario_completion_time(const struct SttScenario *sc);

/**
 * # Safety
 * `sc` must be a live scenario handle.
 */
enum SttStatus stt_scenario_set_seed(struct SttScenario *sc, uint64_t seed);

/**
 * Sets the closed-loop step used by both simulation and comparison.
 *
 * # Safety
 * `sc` must be a live scenario handle.
 */
enum SttStatus stt_scenario_set_dt(struct SttScenario *sc, double dt);

/**
 * # Safety
 * `sc` must be a live scenario handle.
 */
enum SttStatus stt_scenario_set_stay_horizon(struct SttScenario *sc, double horizon);

/**
 * Plans the detours and integrates the tube. A tube that fails its own
 * verification is still returned; check [`stt_synthesis_passed`].
 *
 * # Safety
 * `sc` must be a live scenario handle and `out` a valid pointer.
 */
enum SttStatus stt_synthesize(const struct SttScenario *sc, struct SttSynthesis **out);

/**
 * # Safety
 * `syn` must be null or a handle from this library not yet freed.
 */
void stt_synthesis_free(struct SttSynthesis *syn);

/**
 * Whether assumptions, tube verification and the smoothness scan all pass.
 *
 * # Safety
 * `syn` must be a live synthesis handle and `passed` a valid pointer.
 */
enum SttStatus stt_synthesis_passed(const struct SttSynthesis *syn, bool *passed);

/**
 * Number of obstacles that needed a detour.
 *
 * # Safety
 * `syn` must be null or a live synthesis handle.
 */
size_t stt_synthesis_detour_count(const struct SttSynthesis *syn);

/**
 * Tube bounds at time `t`, linearly interpolated and held after `t_c`.
 * `lower` and `upper` must each hold at least the state dimension.
 *
 * # Safety
 * `syn` must be a live synthesis handle; `lower` and `upper` must point to
 * `len` writable doubles.
 */
enum SttStatus stt_synthesis_tube_at(const struct SttSynthesis *syn,
                                     double t,
                                     double *lower,
                                     double *upper,
                                     size_t len);

/**
 * Writes `tube.csv` and `synthesis.json` into `dir`, creating it if needed.
 *
 * # Safety
 * `syn` must be a live synthesis handle and `dir` a NUL-terminated string.
 */
enum SttStatus stt_synthesis_write(const struct SttSynthesis *syn, const char *dir);

/**
 * Control input for state `x` at time `t` using the scenario's controller
 * and the synthesized tube. Fails with `STT_STATUS_TUBE_VIOLATION` when `x`
 * is not strictly inside the tube.
 *
 * # Safety
 * Handles must be live; `x` must point to `len` readable doubles and `u` to
 * `len` writable doubles.
 */
enum SttStatus stt_control_input(const struct SttScenario *sc,
                                 const struct SttSynthesis *syn,
                                 double t,
                                 const double *x,
                                 double *u,
                                 size_t len);

/**
 * Runs the closed loop from the scenario's initial state. A run that leaves
 * the tube still yields a trace whose flags and last row record the failure.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum SttStatus stt_simulate(const struct SttScenario *sc,
                            const struct SttSynthesis *syn,
                            struct SttTrace **out);

/**
 * # Safety
 * `trace` must be null or a handle from this library not yet freed.
 */
void stt_trace_free(struct SttTrace *trace);

/**
 * Number of recorded rows, 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live trace handle.
 */
size_t stt_trace_rows(const struct SttTrace *trace);

/**
 * Copies row `row`: its time into `t`, the state into `x` and the input into
 * `u` (NaN on the row recording a tube exit). Any of the three may be null.
 *
 * # Safety
 * `trace` must be a live trace handle; non-null `x`/`u` must point to `len`
 * writable doubles and a non-null `t` to one.
 */
enum SttStatus stt_trace_row(const struct SttTrace *trace,
                             size_t row,
                             double *t,
                             double *x,
                             double *u,
                             size_t len);

/**
 * # Safety
 * `trace` must be a live trace handle and `flags` a valid pointer.
 */
enum SttStatus stt_trace_flags(const struct SttTrace *trace, struct SttFlags *flags);

/**
 * Effort over `[0, t_c]` on the full integration grid.
 *
 * # Safety
 * `trace` must be a live trace handle and `effort` a valid pointer.
 */
enum SttStatus stt_trace_effort(const struct SttTrace *trace, struct SttEffort *effort);

/**
 * Writes `trace.csv` and `trace.json` into `dir`.
 *
 * # Safety
 * Handles must be live and `dir` a NUL-terminated string.
 */
enum SttStatus stt_trace_write(const struct SttScenario *sc,
                               const struct SttTrace *trace,
                               const char *dir);

/**
 * Effort of the smooth tube against the reconstructed abrupt baseline, both
 * run with the scenario's seed, gain and comparison step.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum SttStatus stt_compare(const struct SttScenario *sc,
                           const struct SttSynthesis *syn,
                           struct SttComparison *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STT_FFI_H */
