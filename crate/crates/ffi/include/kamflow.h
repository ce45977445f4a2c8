#ifndef KAMFLOW_H
#define KAMFLOW_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a library call.
 */
typedef enum {
  KF_STATUS_OK = 0,
  KF_STATUS_NULL_POINTER = 1,
  KF_STATUS_INVALID_ARGUMENT = 2,
  KF_STATUS_CONFIG = 3,
  KF_STATUS_IO = 4,
  KF_STATUS_LATTICE = 5,
  KF_STATUS_GAP_CLOSED = 6,
  KF_STATUS_SECTOR_STRUCTURE = 7,
  KF_STATUS_GENERATOR_TOO_LARGE = 8,
  KF_STATUS_NOT_CONVERGED = 9,
  KF_STATUS_NOT_SELF_ADJOINT_GENERATOR = 10,
  KF_STATUS_IDENTITY_NOT_ANNIHILATED = 11,
  KF_STATUS_DEGENERATE_KERNEL = 12,
  KF_STATUS_HYPOTHESIS_VIOLATED = 13,
  KF_STATUS_BUFFER_TOO_SMALL = 14,
  KF_STATUS_PANIC = 15,
} KfStatus;

/**
 * Flow mode selector for [`kf_config_set_mode`].
 */
typedef enum {
  KF_MODE_DENSE = 0,
  KF_MODE_SERIES = 1,
} KfMode;

/**
 * Parsed and validated run configuration.
 */
typedef struct KfConfig KfConfig;

/**
 * Finished flow run.
 */
typedef struct KfFlow KfFlow;

/**
 * Stationary state of a Markov configuration.
 */
typedef struct KfStationary KfStationary;

/**
 * One row of the flow diagnostics; see the diagnostics CSV columns.
 */
typedef struct {
  size_t n;
  double kappa_2n;
  double e_n;
  double f_n;
  double v_n;
  double a_n;
  /**
   * `d_n / |Λ|`.
   */
  double d_re;
  double d_im;
  double drop_budget;
} KfDiagnosticsRow;

/**
 * Numbers of one randomized check.
 */
typedef struct {
  bool pass;
  bool skipped;
  double measured;
  double bound;
  double margin;
  double tolerance;
} KfCheckReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. Valid until the next failing call.
 */
const char *kf_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *kf_version(void);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` is null or was returned by this library and not yet freed.
 */
void kf_string_free(char *s);

/**
 * Parses a JSON configuration document.
 *
 * # Safety
 * `json` is a nul-terminated string and `out` is writable.
 */
KfStatus kf_config_parse(const char *json, KfConfig **out);

/**
 * Reads and parses a JSON configuration file.
 *
 * # Safety
 * `path` is a nul-terminated string and `out` is writable.
 */
KfStatus kf_config_load(const char *path, KfConfig **out);

/**
 * # Safety
 * `cfg` is null or a live configuration.
 */
void kf_config_free(KfConfig *cfg);

/**
 * Sets the random seed used by verification runs.
 *
 * # Safety
 * `cfg` is a live configuration.
 */
KfStatus kf_config_set_seed(KfConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` is a live configuration.
 */
KfStatus kf_config_set_mode(KfConfig *cfg, KfMode mode);

/**
 * # Safety
 * `cfg` is a live configuration.
 */
KfStatus kf_config_set_vtol(KfConfig *cfg, double vtol);

/**
 * # Safety
 * `cfg` is a live configuration.
 */
KfStatus kf_config_set_nmax(KfConfig *cfg, size_t nmax);

/**
 * Runs the flow of a `flow` configuration. A run that stops at `nmax` without converging
 * still succeeds; query [`kf_flow_converged`].
 *
 * # Safety
 * `cfg` is a live configuration and `out` is writable.
 */
KfStatus kf_flow_run(const KfConfig *cfg, KfFlow **out);

/**
 * # Safety
 * `flow` is null or a live flow.
 */
void kf_flow_free(KfFlow *flow);

/**
 * # Safety
 * `flow` is a live flow.
 */
bool kf_flow_converged(const KfFlow *flow);

/**
 * # Safety
 * `flow` is a live flow.
 */
bool kf_flow_self_adjoint(const KfFlow *flow);

/**
 * Number of conjugation steps applied.
 *
 * # Safety
 * `flow` is a live flow.
 */
size_t kf_flow_steps(const KfFlow *flow);

/**
 * Scalar summaries of a flow: the constant `d`, `d/|Λ|`, `sum_n |A_n|_kappa` and the
 * smallness parameter. Any output pointer may be null.
 *
 * # Safety
 * `flow` is a live flow; non-null outputs are writable.
 */
KfStatus kf_flow_summary(const KfFlow *flow,
                         double *d_re,
                         double *d_im,
                         double *d_per_site_re,
                         double *sum_a_kappa,
                         double *epsilon_value);

/**
 * Number of diagnostics rows, one per iteration including the final one.
 *
 * # Safety
 * `flow` is a live flow.
 */
size_t kf_flow_num_rows(const KfFlow *flow);

/**
 * # Safety
 * `flow` is a live flow and `out` is writable.
 */
KfStatus kf_flow_row(const KfFlow *flow, size_t index, KfDiagnosticsRow *out);

/**
 * Diagnostics as CSV text with header; release with [`kf_string_free`].
 *
 * # Safety
 * `flow` is a live flow and `out` is writable.
 */
KfStatus kf_flow_diagnostics_csv(const KfFlow *flow, char **out);

/**
 * Dimension of the full Hilbert space of a flow.
 *
 * # Safety
 * `flow` is a live flow.
 */
size_t kf_flow_dim(const KfFlow *flow);

/**
 * Copies the dense final operator `H_F` into `buf` (row-major `(re, im)` pairs, `2 dim^2`
 * doubles).
 *
 * # Safety
 * `flow` is a live flow and `buf` is valid for `len` writes.
 */
KfStatus kf_flow_final_operator(const KfFlow *flow, double *buf, size_t len);

/**
 * Runs one randomized check by name (e.g. `"generator_bound"`) from `seed`. `json_out`
 * may be null; otherwise it receives the JSON report, released with [`kf_string_free`].
 *
 * # Safety
 * `check` is a nul-terminated string, `out` is writable, `json_out` is null or writable.
 */
KfStatus kf_verify_one(const char *check,
                       uint64_t seed,
                       double bound_scale,
                       KfCheckReport *out,
                       char **json_out);

/**
 * Solves a `markov` configuration through the flow, comparing against a direct kernel solve.
 *
 * # Safety
 * `cfg` is a live configuration and `out` is writable.
 */
KfStatus kf_markov_run(const KfConfig *cfg, KfStationary **out);

/**
 * # Safety
 * `st` is null or a live stationary state.
 */
void kf_stationary_free(KfStationary *st);

/**
 * `lambda`, the constant `d`, and the trace distance to the direct solve. Any output
 * pointer may be null.
 *
 * # Safety
 * `st` is a live stationary state; non-null outputs are writable.
 */
KfStatus kf_stationary_summary(const KfStationary *st,
                               double *lambda_re,
                               double *lambda_im,
                               double *d_abs,
                               double *distance,
                               bool *converged);

/**
 * Side length of the stationary density matrix.
 *
 * # Safety
 * `st` is a live stationary state.
 */
size_t kf_stationary_dim(const KfStationary *st);

/**
 * Copies the density matrix (diagonal for classical problems) into `buf` as row-major
 * `(re, im)` pairs.
 *
 * # Safety
 * `st` is a live stationary state and `buf` is valid for `len` writes.
 */
KfStatus kf_stationary_density(const KfStationary *st, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KAMFLOW_H */
