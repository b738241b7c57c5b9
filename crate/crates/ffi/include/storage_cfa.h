#ifndef STORAGE_CFA_H
#define STORAGE_CFA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every fallible call.
typedef enum ScfaStatus {
  SCFA_STATUS_OK = 0,
  SCFA_STATUS_NULL_POINTER = 1,
  SCFA_STATUS_INVALID_ARGUMENT = 2,
  SCFA_STATUS_PARSE = 3,
  SCFA_STATUS_IO = 4,
  SCFA_STATUS_SOLVER = 5,
  SCFA_STATUS_PANIC = 6,
} ScfaStatus;

// Opaque policy: family plus parameters.
typedef struct ScfaPolicy ScfaPolicy;

// Opaque problem instance.
typedef struct ScfaScenario ScfaScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` as a
// NUL-terminated string, truncating to fit. Returns the full message
// length in bytes, excluding the terminator; pass a null `buf` to query it.
//
// # Safety
// `buf` must be null or valid for writes of `len` bytes.
size_t scfa_last_error_message(char *buf, size_t len);

// The built-in synthetic scenario (72 hourly periods, 23-period lookahead,
// noiseless forecasts). Never null.
struct ScfaScenario *scfa_scenario_default(void);

// Parses a scenario from JSON text.
//
// # Safety
// `json` must be null or a NUL-terminated string; `out` must be null or
// valid for a pointer write.
enum ScfaStatus scfa_scenario_from_json(const char *json, struct ScfaScenario **out);

// Sets the forecast noise level of a scenario.
//
// # Safety
// `scenario` must be null or a live handle from this library.
enum ScfaStatus scfa_scenario_set_rho(struct ScfaScenario *scenario, double rho_e);

// Lookahead length `H`, i.e. the lookup-table dimension.
//
// # Safety
// `scenario` must be null or a live handle; `out` null or writable.
enum ScfaStatus scfa_scenario_lookahead(const struct ScfaScenario *scenario, size_t *out);

// Releases a scenario; null is ignored.
//
// # Safety
// `scenario` must be null or a live handle, and is invalid afterwards.
void scfa_scenario_free(struct ScfaScenario *scenario);

// Builds a policy from a family name (`benchmark`, `const`, `lkup`, `exp`)
// and `len` parameters. `theta` may be null when `len` is zero. The
// dimension is checked when the policy is evaluated.
//
// # Safety
// `family` must be null or NUL-terminated; `theta` must be null or valid
// for `len` reads; `out` must be null or valid for a pointer write.
enum ScfaStatus scfa_policy_new(const char *family,
                                const double *theta,
                                size_t len,
                                struct ScfaPolicy **out);

// Releases a policy; null is ignored.
//
// # Safety
// `policy` must be null or a live handle, and is invalid afterwards.
void scfa_policy_free(struct ScfaPolicy *policy);

// Total cost of one rollout over the forecast path identified by `seed`.
//
// # Safety
// Handles must be null or live; `out` must be null or writable.
enum ScfaStatus scfa_rollout_cost(const struct ScfaScenario *scenario,
                                  const struct ScfaPolicy *policy,
                                  uint64_t seed,
                                  double *out);

// Mean cost and standard error over paths `seed_base..seed_base+n_paths`.
// `stderr_out` may be null.
//
// # Safety
// Handles must be null or live; the outputs must be null or writable.
enum ScfaStatus scfa_estimate_objective(const struct ScfaScenario *scenario,
                                        const struct ScfaPolicy *policy,
                                        size_t n_paths,
                                        uint64_t seed_base,
                                        double *mean_out,
                                        double *stderr_out);

// Relative change `(policy - benchmark) / |benchmark|`; negative is better.
//
// # Safety
// `out` must be null or writable.
enum ScfaStatus scfa_improvement(double policy_mean, double benchmark_mean, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STORAGE_CFA_H */
