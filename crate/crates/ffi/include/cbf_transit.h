#ifndef CBF_TRANSIT_H
#define CBF_TRANSIT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Per-step quantities that [`cbf_log_copy`] can extract.
typedef enum CbfField {
  CBF_FIELD_STATE = 0,
  // QP decision variable.
  CBF_FIELD_CONTROL = 1,
  // Input applied to the plant.
  CBF_FIELD_APPLIED = 2,
  CBF_FIELD_ALPHA = 3,
  CBF_FIELD_ALPHA_DOT = 4,
  // Reachability barriers, then safety barriers.
  CBF_FIELD_BARRIERS = 5,
} CbfField;

typedef enum CbfMode {
  CBF_MODE_SMOOTH = 0,
  CBF_MODE_DISCRETE = 1,
} CbfMode;

typedef enum CbfStatus {
  CBF_STATUS_OK = 0,
  CBF_STATUS_NULL_POINTER = 1,
  CBF_STATUS_INVALID_ARGUMENT = 2,
  CBF_STATUS_IO = 3,
  CBF_STATUS_PARSE = 4,
  CBF_STATUS_VALIDATION = 5,
  CBF_STATUS_INFEASIBLE = 6,
  CBF_STATUS_NUMERICAL = 7,
  CBF_STATUS_OUT_OF_RANGE = 8,
  CBF_STATUS_BUFFER_TOO_SMALL = 9,
  CBF_STATUS_PANIC = 10,
} CbfStatus;

typedef enum CbfTermination {
  CBF_TERMINATION_COMPLETED = 0,
  CBF_TERMINATION_INFEASIBLE = 1,
  CBF_TERMINATION_TIMED_OUT = 2,
} CbfTermination;

// Opaque trajectory log handle.
typedef struct CbfLog CbfLog;

// Opaque scenario handle.
typedef struct CbfScenario CbfScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *cbf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cbf_version(void);

// Loads a scenario from a JSON file, or a bundled scenario by name when no
// such file exists.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum CbfStatus cbf_scenario_load(const char *path, struct CbfScenario **out);

// Parses a scenario from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum CbfStatus cbf_scenario_from_json(const char *json, struct CbfScenario **out);

// # Safety
// `scenario` must come from this library and not be used afterwards.
// Null is ignored.
void cbf_scenario_free(struct CbfScenario *scenario);

// Overrides the integration step and time limit. Pass a non-positive
// value to keep the current setting. The scenario is left unchanged when
// the result does not validate.
//
// # Safety
// `scenario` must be a valid handle.
enum CbfStatus cbf_scenario_set_timing(struct CbfScenario *scenario, double dt, double t_max);

// Integration step of the scenario.
//
// # Safety
// `scenario` must be a valid handle and `out` a valid pointer.
enum CbfStatus cbf_scenario_dt(const struct CbfScenario *scenario, double *out);

// Simulates the scenario. An infeasible QP or a timeout still yields a log;
// check [`cbf_log_termination`].
//
// # Safety
// `scenario` must be a valid handle and `out` a valid pointer.
enum CbfStatus cbf_run(const struct CbfScenario *scenario, enum CbfMode mode, struct CbfLog **out);

// # Safety
// `log` must come from this library and not be used afterwards.
// Null is ignored.
void cbf_log_free(struct CbfLog *log);

// Number of records; 0 for a null handle.
//
// # Safety
// `log` must be a valid handle or null.
size_t cbf_log_len(const struct CbfLog *log);

// # Safety
// `log` must be a valid handle and `out` a valid pointer.
enum CbfStatus cbf_log_termination(const struct CbfLog *log, enum CbfTermination *out);

// Time of record `index`.
//
// # Safety
// `log` must be a valid handle and `out` a valid pointer.
enum CbfStatus cbf_log_time(const struct CbfLog *log, size_t index, double *out);

// Copies one field of record `index` into `buf`. `written` receives the
// field length; when `capacity` is too small nothing is copied and
// [`CbfStatus::BufferTooSmall`] is returned, so a first call with
// `capacity = 0` queries the size.
//
// # Safety
// `log` must be a valid handle, `written` a valid pointer and `buf` valid
// for `capacity` writes.
enum CbfStatus cbf_log_copy(const struct CbfLog *log,
                            size_t index,
                            enum CbfField field,
                            double *buf,
                            size_t capacity,
                            size_t *written);

// Arrival times at each task's target, in task order. Same buffer protocol
// as [`cbf_log_copy`].
//
// # Safety
// As for [`cbf_log_copy`].
enum CbfStatus cbf_log_arrival_times(const struct CbfLog *log,
                                     double *buf,
                                     size_t capacity,
                                     size_t *written);

// Largest step-to-step change of the QP decision variable, infinity norm.
//
// # Safety
// `log` must be a valid handle and `out` a valid pointer.
enum CbfStatus cbf_log_max_jump(const struct CbfLog *log, double *out);

// Writes the CSV, events JSON and SVG plots into `dir`.
//
// # Safety
// Handles must be valid and `dir` a NUL-terminated string.
enum CbfStatus cbf_log_write_outputs(const struct CbfLog *log,
                                     const struct CbfScenario *scenario,
                                     const char *dir);

// `-ln(sum(exp(-v_i)))` of `len > 0` values.
//
// # Safety
// `values` must be valid for `len` reads and `out` a valid pointer.
enum CbfStatus cbf_softmin(const double *values, size_t len, double *out);

// Minimum-norm `u` in `R^dim` with `a_i . u >= b_i` for every row and
// `|u_j| <= bound`. `a` holds `rows * dim` values row-major; `u` receives
// `dim` values. Returns [`CbfStatus::Infeasible`] when no such `u` exists.
//
// # Safety
// `a` must be valid for `rows * dim` reads, `b` for `rows` reads and `u`
// for `dim` writes.
enum CbfStatus cbf_qp_solve(size_t dim,
                            double bound,
                            const double *a,
                            const double *b,
                            size_t rows,
                            double *u);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CBF_TRANSIT_H */
