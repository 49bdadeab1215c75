#ifndef AOISCHED_H
#define AOISCHED_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum AoischedStatus {
  AOISCHED_STATUS_OK = 0,
  AOISCHED_STATUS_NULL_POINTER = 1,
  AOISCHED_STATUS_INVALID_UTF8 = 2,
  // The scenario text is not well-formed.
  AOISCHED_STATUS_PARSE_ERROR = 3,
  // The scenario is well-formed but violates a parameter rule.
  AOISCHED_STATUS_INVALID_SCENARIO = 4,
  // The scenario's load leaves no room for the requested computation.
  AOISCHED_STATUS_INFEASIBLE = 5,
  AOISCHED_STATUS_SOLVER_ERROR = 6,
  AOISCHED_STATUS_SIMULATION_ERROR = 7,
  // An index or id does not exist.
  AOISCHED_STATUS_OUT_OF_RANGE = 8,
  AOISCHED_STATUS_IO_ERROR = 9,
  // A panic was caught at the boundary.
  AOISCHED_STATUS_INTERNAL = 10,
} AoischedStatus;

typedef enum AoischedPolicy {
  AOISCHED_POLICY_HIERARCHICAL = 0,
  AOISCHED_POLICY_VIRTUAL_WEIGHTS = 1,
  AOISCHED_POLICY_RANDOMIZED = 2,
  AOISCHED_POLICY_C_MU = 3,
} AoischedPolicy;

typedef enum AoischedClass {
  AOISCHED_CLASS_AOI = 0,
  AOISCHED_CLASS_LATENCY = 1,
  AOISCHED_CLASS_THROUGHPUT = 2,
} AoischedClass;

// Opaque run report handle.
typedef struct AoischedReport AoischedReport;

// Opaque scenario handle.
typedef struct AoischedScenario AoischedScenario;

typedef struct AoischedFeasibility {
  double load;
  double zeta;
  bool feasible;
  // NaN unless the scenario is latency-constrained.
  double theta_sum;
  // -1 when not applicable, otherwise 0 or 1.
  int32_t randomized_feasible;
} AoischedFeasibility;

typedef struct AoischedLowerBound {
  double lb_f1;
  double lb_f2;
  double lb;
} AoischedLowerBound;

typedef struct AoischedRunOptions {
  enum AoischedPolicy policy;
  uint64_t horizon;
  uint64_t seed;
  uint64_t warmup;
  // Slots between virtual-weight updates.
  uint64_t vw_period;
  // Virtual-weight step size.
  double vw_step;
} AoischedRunOptions;

typedef struct AoischedUeMetrics {
  uint32_t ue_id;
  enum AoischedClass class_;
  uint64_t arrivals;
  uint64_t deliveries;
  uint64_t attempts;
  double avg_aoi;
  double avg_latency;
  double throughput;
  double t_bar;
  double delta_sq;
  double attempts_share;
} AoischedUeMetrics;

typedef struct AoischedCost {
  double cost_objective;
  double f1;
  double f2;
} AoischedCost;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next API call on the same thread.
const char *aoisched_last_error(void);

// Library version as a static NUL-terminated string.
const char *aoisched_version(void);

// Parses a scenario from TOML text.
//
// # Safety
// `text` must be NUL-terminated; `out` must be writable.
enum AoischedStatus aoisched_scenario_from_str(const char *text, struct AoischedScenario **out);

// Reads and parses a scenario file.
//
// # Safety
// `path` must be NUL-terminated; `out` must be writable.
enum AoischedStatus aoisched_scenario_from_file(const char *path, struct AoischedScenario **out);

// Frees a scenario. Null is ignored.
//
// # Safety
// `scenario` must come from this library and not be used afterwards.
void aoisched_scenario_free(struct AoischedScenario *scenario);

// Number of users in the scenario, 0 for null.
//
// # Safety
// `scenario` must be null or a live handle.
size_t aoisched_scenario_ue_count(const struct AoischedScenario *scenario);

// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum AoischedStatus aoisched_scenario_validate(const struct AoischedScenario *scenario,
                                               struct AoischedFeasibility *out);

// Target spacing and counter threshold for AoI user `ue_id`.
//
// # Safety
// `scenario` must be a live handle; `t_star` and `threshold` must be writable.
enum AoischedStatus aoisched_tstar(const struct AoischedScenario *scenario,
                                   uint32_t ue_id,
                                   double *t_star,
                                   uint64_t *threshold);

// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum AoischedStatus aoisched_lower_bound(const struct AoischedScenario *scenario,
                                         uint64_t horizon,
                                         uint64_t seed,
                                         struct AoischedLowerBound *out);

// Defaults: hierarchical policy, 10^6 slots, seed 0, no warm-up,
// virtual-weight period 10000 and step 0.1.
struct AoischedRunOptions aoisched_run_options_default(void);

// Simulates one run. `options` may be null for the defaults.
//
// # Safety
// `scenario` must be a live handle, `options` null or readable, `out` writable.
enum AoischedStatus aoisched_run(const struct AoischedScenario *scenario,
                                 const struct AoischedRunOptions *options,
                                 struct AoischedReport **out);

// Frees a report. Null is ignored.
//
// # Safety
// `report` must come from this library and not be used afterwards.
void aoisched_report_free(struct AoischedReport *report);

// Number of users in the report, 0 for null.
//
// # Safety
// `report` must be null or a live handle.
size_t aoisched_report_ue_count(const struct AoischedReport *report);

// Metrics of the `index`-th user, in ascending id order.
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum AoischedStatus aoisched_report_ue(const struct AoischedReport *report,
                                       size_t index,
                                       struct AoischedUeMetrics *out);

// # Safety
// `report` must be a live handle; `out` must be writable.
enum AoischedStatus aoisched_report_cost(const struct AoischedReport *report,
                                         struct AoischedCost *out);

// The report as CSV text; release it with [`aoisched_string_free`].
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum AoischedStatus aoisched_report_to_csv(const struct AoischedReport *report, char **out);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void aoisched_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AOISCHED_H */
