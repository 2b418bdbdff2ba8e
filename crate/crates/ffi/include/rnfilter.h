#ifndef RNFILTER_H
#define RNFILTER_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RnFilterKind {
  RN_FILTER_KIND_GPF = 0,
  RN_FILTER_KIND_QPF = 1,
  RN_FILTER_KIND_LNA = 2,
} RnFilterKind;

/**
 * Result of every fallible call.
 */
typedef enum RnStatus {
  RN_STATUS_OK = 0,
  RN_STATUS_NULL_POINTER = 1,
  RN_STATUS_INVALID_ARGUMENT = 2,
  RN_STATUS_PARSE = 3,
  RN_STATUS_NUMERICAL = 4,
  RN_STATUS_PANIC = 5,
} RnStatus;

/**
 * A parsed reaction network.
 */
typedef struct RnNetwork RnNetwork;

/**
 * Noisy observations of a path.
 */
typedef struct RnObservations RnObservations;

/**
 * A sampled jump path.
 */
typedef struct RnPath RnPath;

/**
 * A filter's MAP trail on its output grid.
 */
typedef struct RnTrajectory RnTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rn_version(void);

/**
 * Description of the last failure on this thread, or NULL. The pointer
 * stays valid until the next `rn_*` call on the same thread.
 */
const char *rn_last_error_message(void);

/**
 * Releases a string returned by an `rn_*_to_csv` call.
 */
void rn_string_free(char *s);

/**
 * Parses a network definition.
 */
enum RnStatus rn_network_parse(const char *definition, struct RnNetwork **out);

/**
 * Built-in benchmark network, `"bistable"` or `"limit_cycle"`, at system size `omega`.
 */
enum RnStatus rn_network_builtin(const char *name, double omega, struct RnNetwork **out);

/**
 * Number of species; 0 for a null handle.
 */
size_t rn_network_n_species(const struct RnNetwork *net);

void rn_network_free(struct RnNetwork *net);

/**
 * Exact path on `[t0, t_end]` from the `n` counts in `x0`.
 */
enum RnStatus rn_simulate(const struct RnNetwork *net,
                          const int64_t *x0,
                          size_t n,
                          double t0,
                          double t_end,
                          uint64_t seed,
                          struct RnPath **out);

/**
 * Number of stored states: the initial one plus one per jump.
 */
size_t rn_path_len(const struct RnPath *path);

/**
 * Writes the `n` counts active at time `t` into `state`.
 */
enum RnStatus rn_path_sample_at(const struct RnPath *path, double t, int64_t *state, size_t n);

/**
 * CSV export of the path; release with [`rn_string_free`].
 */
char *rn_path_to_csv(const struct RnPath *path);

void rn_path_free(struct RnPath *path);

/**
 * Observes `path` every `dt` through the row-major `d × n` matrix `g`
 * with noise covariance `v·I`.
 */
enum RnStatus rn_observe(const struct RnPath *path,
                         double dt,
                         double v,
                         const double *g,
                         size_t d,
                         uint64_t seed,
                         struct RnObservations **out);

/**
 * Number of observation times.
 */
size_t rn_observations_len(const struct RnObservations *obs);

char *rn_observations_to_csv(const struct RnObservations *obs);

void rn_observations_free(struct RnObservations *obs);

/**
 * Runs one filter from its default prior up to `t_end`, sampling the MAP
 * estimate every `out_dt`.
 */
enum RnStatus rn_filter_run(const struct RnNetwork *net,
                            enum RnFilterKind kind,
                            const struct RnObservations *obs,
                            double t_end,
                            double out_dt,
                            struct RnTrajectory **out);

/**
 * Number of output grid points.
 */
size_t rn_trajectory_len(const struct RnTrajectory *traj);

/**
 * State dimension of the MAP estimate.
 */
size_t rn_trajectory_dim(const struct RnTrajectory *traj);

/**
 * Copies the grid times into `buf`, which holds `len` values.
 */
enum RnStatus rn_trajectory_times(const struct RnTrajectory *traj, double *buf, size_t len);

/**
 * Copies the MAP trail, row-major (`len × dim`), into `buf`.
 */
enum RnStatus rn_trajectory_map(const struct RnTrajectory *traj, double *buf, size_t len);

void rn_trajectory_free(struct RnTrajectory *traj);

/**
 * Time-averaged squared distance between the path and the MAP trail.
 */
enum RnStatus rn_mse(const struct RnPath *path, const struct RnTrajectory *traj, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RNFILTER_H */
