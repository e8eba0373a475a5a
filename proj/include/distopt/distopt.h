/* C interface of the distopt library. All handles are opaque; every function
 * returns a status code and reports failures through distopt_last_error(). */
#ifndef DISTOPT_DISTOPT_H
#define DISTOPT_DISTOPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(DISTOPT_BUILDING_LIBRARY)
#define DISTOPT_API __attribute__((visibility("default")))
#else
#define DISTOPT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  DISTOPT_OK = 0,
  DISTOPT_ERR_INVALID_ARGUMENT = 1,
  DISTOPT_ERR_DIMENSION = 2,
  DISTOPT_ERR_PARSE = 3,
  DISTOPT_ERR_SOLVER = 4,
  DISTOPT_ERR_SINGULAR = 5,
  DISTOPT_ERR_INFEASIBLE = 6,
  DISTOPT_ERR_IO = 7,
  DISTOPT_ERR_NULL = 8,
  DISTOPT_ERR_BUFFER = 9,
  DISTOPT_ERR_INTERNAL = 10
} distopt_status;

typedef struct distopt_scenario distopt_scenario;
typedef struct distopt_options distopt_options;
typedef struct distopt_result distopt_result;
typedef struct distopt_run_config distopt_run_config;
typedef struct distopt_run_result distopt_run_result;

DISTOPT_API const char* distopt_version(void);

/* Message of the last failing call on this thread ("" if none). */
DISTOPT_API const char* distopt_last_error(void);

/* Scenarios: a built-in name or a JSON file path. */
DISTOPT_API distopt_status distopt_scenario_create(const char* name, uint64_t seed, distopt_scenario** out);
DISTOPT_API void distopt_scenario_destroy(distopt_scenario* scenario);
DISTOPT_API distopt_status distopt_scenario_dims(const distopt_scenario* scenario, size_t* subsystems,
                                                 size_t* total_dim, size_t* coupling_rows);

/* Solver options; keys: rho, mu, eps, max_iter, alpha1, alpha2, alpha3,
 * mu_max, grow_mu, fallback. Unset keys keep the scenario defaults. */
DISTOPT_API distopt_status distopt_options_create(distopt_options** out);
DISTOPT_API void distopt_options_destroy(distopt_options* options);
DISTOPT_API distopt_status distopt_options_set(distopt_options* options, const char* key, double value);

/* algorithm: "admm", "aladin", "aladin_bfgs" or "oracle". options may be NULL. */
DISTOPT_API distopt_status distopt_solve(const distopt_scenario* scenario, const char* algorithm,
                                         const distopt_options* options, distopt_result** out);
DISTOPT_API void distopt_result_destroy(distopt_result* result);
/* 1 when converged, 0 otherwise. */
DISTOPT_API int distopt_result_converged(const distopt_result* result);
DISTOPT_API double distopt_result_objective(const distopt_result* result);
DISTOPT_API double distopt_result_residual(const distopt_result* result);
DISTOPT_API int distopt_result_iterations(const distopt_result* result);
/* Copies the primal solution; len must be at least the total dimension. */
DISTOPT_API distopt_status distopt_result_solution(const distopt_result* result, double* buffer, size_t len);
DISTOPT_API size_t distopt_result_trace_length(const distopt_result* result);
/* Coupling residual of trace row k. */
DISTOPT_API distopt_status distopt_result_trace_residual(const distopt_result* result, size_t k, double* value);

/* Per-iteration traffic predicted for the variant ("admm", "aladin",
 * "aladin_bfgs") and subsystem dimensions. */
DISTOPT_API distopt_status distopt_expected_volume(const char* variant, const int64_t* dims, size_t count,
                                                   int64_t* up, int64_t* down);

/* Command-style runs with artifacts. Keys: scenario, algorithm, rho, mu, eps,
 * max_iter, alpha1, alpha2, alpha3, out, seed, mpc_steps. */
DISTOPT_API distopt_status distopt_run_config_create(distopt_run_config** out);
DISTOPT_API void distopt_run_config_destroy(distopt_run_config* config);
DISTOPT_API distopt_status distopt_run_config_set(distopt_run_config* config, const char* key, const char* value);
DISTOPT_API distopt_status distopt_run_execute(const distopt_run_config* config, distopt_run_result** out);
DISTOPT_API void distopt_run_result_destroy(distopt_run_result* result);
/* 0 converged, 2 iteration limit, 1 error. */
DISTOPT_API int distopt_run_exit_code(const distopt_run_result* result);
DISTOPT_API const char* distopt_run_status(const distopt_run_result* result);
DISTOPT_API const char* distopt_run_message(const distopt_run_result* result);
DISTOPT_API double distopt_run_objective(const distopt_run_result* result);
DISTOPT_API int distopt_run_iterations(const distopt_run_result* result);
/* Returns 0 and leaves value untouched when no oracle gap was computed. */
DISTOPT_API int distopt_run_oracle_gap(const distopt_run_result* result, double* value);

#ifdef __cplusplus
}
#endif

#endif
