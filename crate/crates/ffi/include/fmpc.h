#ifndef FMPC_H
#define FMPC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum FmpcStatus {
  FMPC_STATUS_OK = 0,
  FMPC_STATUS_NULL_POINTER = 1,
  FMPC_STATUS_INVALID_ARGUMENT = 2,
  FMPC_STATUS_INVALID_UTF8 = 3,
  FMPC_STATUS_CONFIG = 4,
  FMPC_STATUS_PROTOCOL = 5,
  FMPC_STATUS_ALGEBRA = 6,
  FMPC_STATUS_BUFFER_TOO_SMALL = 7,
  FMPC_STATUS_PANIC = 8,
} FmpcStatus;

/**
 * The outcome of running a scenario.
 */
typedef struct FmpcRun FmpcRun;

/**
 * A parsed scenario.
 */
typedef struct FmpcScenario FmpcScenario;

/**
 * A Θ-expression.
 */
typedef struct FmpcTheta FmpcTheta;

/**
 * Library version as a static string; do not free.
 */
const char *fmpc_version(void);

/**
 * Message of the last failure on this thread, or null. Free with
 * [`fmpc_string_free`].
 */
char *fmpc_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void fmpc_string_free(char *s);

/**
 * Parses a TOML scenario.
 *
 * # Safety
 * `toml` must be a nul-terminated string; `out` must be writable.
 */
enum FmpcStatus fmpc_scenario_from_toml(const char *toml, struct FmpcScenario **out);

/**
 * The shipped two-party worked example.
 *
 * # Safety
 * `out` must be writable.
 */
enum FmpcStatus fmpc_scenario_worked_example(struct FmpcScenario **out);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum FmpcStatus fmpc_scenario_set_seed(struct FmpcScenario *scenario, uint64_t seed);

/**
 * Marks a node (`N2`, `B1`, `L3`, ...) as corrupted for the privacy check.
 *
 * # Safety
 * `scenario` must be a live handle and `node` a nul-terminated string.
 */
enum FmpcStatus fmpc_scenario_corrupt(struct FmpcScenario *scenario, const char *node);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void fmpc_scenario_free(struct FmpcScenario *scenario);

/**
 * Runs a scenario through the harness.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum FmpcStatus fmpc_run(const struct FmpcScenario *scenario, struct FmpcRun **out);

/**
 * # Safety
 * `run` must be a live handle; `re` and `im` must be writable.
 */
enum FmpcStatus fmpc_run_display(const struct FmpcRun *run, double *re, double *im);

/**
 * `Σ x_j a_j + y Π a_j` for the scenario inputs.
 *
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum FmpcStatus fmpc_run_expected(const struct FmpcRun *run, double *out);

/**
 * Overall verdict of the run.
 *
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum FmpcStatus fmpc_run_passed(const struct FmpcRun *run, bool *out);

/**
 * Number of node-to-node messages in the log (always 0 for a healthy run).
 *
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum FmpcStatus fmpc_run_internode_messages(const struct FmpcRun *run, size_t *out);

/**
 * The run report as JSON. Free with [`fmpc_string_free`].
 *
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum FmpcStatus fmpc_run_report_json(const struct FmpcRun *run, char **out);

/**
 * # Safety
 * `run` must be null or a handle not yet freed.
 */
void fmpc_run_free(struct FmpcRun *run);

/**
 * Builds `Σ (re[k] + i·im[k]) Θ^grades[k]`.
 *
 * # Safety
 * The three arrays must hold `len` readable elements; `out` must be writable.
 */
enum FmpcStatus fmpc_theta_new(const uint32_t *grades,
                               const double *re,
                               const double *im,
                               size_t len,
                               struct FmpcTheta **out);

/**
 * `a ∗ b`.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum FmpcStatus fmpc_theta_star(const struct FmpcTheta *a,
                                const struct FmpcTheta *b,
                                struct FmpcTheta **out);

/**
 * `a + b`.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum FmpcStatus fmpc_theta_add(const struct FmpcTheta *a,
                               const struct FmpcTheta *b,
                               struct FmpcTheta **out);

/**
 * EvalT of the expression.
 *
 * # Safety
 * `t` must be a live handle; `re` and `im` must be writable.
 */
enum FmpcStatus fmpc_theta_eval(const struct FmpcTheta *t, double *re, double *im);

/**
 * # Safety
 * `t` must be null or a handle not yet freed.
 */
void fmpc_theta_free(struct FmpcTheta *t);

/**
 * Checks the generalized Parseval identity on `trials` random dense sets of
 * `n` inputs and writes the largest relative disagreement of the two paths.
 *
 * # Safety
 * `worst` must be writable.
 */
enum FmpcStatus fmpc_verify_identity(size_t n,
                                     size_t trials,
                                     size_t truncation,
                                     uint64_t seed,
                                     double *worst);

/**
 * Writes the `m + 1` Chebyshev nodes of degree `m` into `out`.
 *
 * # Safety
 * `out` must hold `cap` writable doubles.
 */
enum FmpcStatus fmpc_cheb_nodes(size_t m, double *out, size_t cap);

/**
 * `max_deriv / (2^m (m+1)!)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FmpcStatus fmpc_cheb_error_bound(double max_deriv, size_t m, double *out);

#endif  /* FMPC_H */
