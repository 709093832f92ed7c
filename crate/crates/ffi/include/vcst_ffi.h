#ifndef VCST_FFI_H
#define VCST_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define VCST_OK 0

/**
 * Null pointer or unparsable argument.
 */
#define VCST_ERR_INVALID_ARG 1

/**
 * Scenario generation failed (e.g. separation infeasible).
 */
#define VCST_ERR_GENERATION 2

/**
 * Planning failed.
 */
#define VCST_ERR_PLANNING 3

/**
 * The produced plan failed validation.
 */
#define VCST_ERR_VALIDATION 4

/**
 * JSON (de)serialization failed.
 */
#define VCST_ERR_JSON 5

/**
 * Opaque plan handle.
 */
typedef struct VcstPlan VcstPlan;

/**
 * Opaque scenario handle.
 */
typedef struct VcstScenario VcstScenario;

/**
 * Flat metrics record, mirroring the library's PlanMetrics.
 */
typedef struct VcstMetrics {
  double total_distance_km;
  double packages_per_km;
  double makespan_min;
  double active_makespan_min;
  double wait_time_s;
  uint64_t n_waits;
  uint64_t n_relays_used;
} VcstMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Generates a preset scenario. `family` is one of the preset names
 * (e.g. "small_dense"); `capacity` overrides the preset when > 0.
 *
 * # Safety
 * `family` must be a valid NUL-terminated string and `out` a valid pointer.
 */
int32_t vcst_scenario_generate(const char *family,
                               uint64_t seed,
                               uint32_t capacity,
                               struct VcstScenario **out);

/**
 * Parses a scenario from its JSON form.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
int32_t vcst_scenario_from_json(const char *json, struct VcstScenario **out);

/**
 * Serializes a scenario to JSON. The string must be freed with
 * `vcst_string_free`.
 *
 * # Safety
 * `scenario` must be a live handle from this library; `out` non-null.
 */
int32_t vcst_scenario_to_json(const struct VcstScenario *scenario, char **out);

/**
 * Plans a scenario with the named planner ("vcst", "hungarian", "cvrp")
 * and validates the result before returning it.
 *
 * # Safety
 * `scenario` must be a live handle; `planner` a valid string; `out` non-null.
 */
int32_t vcst_plan_create(const struct VcstScenario *scenario,
                         const char *planner,
                         double lambda_svc,
                         struct VcstPlan **out);

/**
 * Computes the benchmark metrics for a plan.
 *
 * # Safety
 * Both handles must be live and belong together; `out` non-null.
 */
int32_t vcst_plan_metrics(const struct VcstPlan *plan,
                          const struct VcstScenario *scenario,
                          struct VcstMetrics *out);

/**
 * Serializes a plan to JSON. The string must be freed with
 * `vcst_string_free`.
 *
 * # Safety
 * `plan` must be a live handle; `out` non-null.
 */
int32_t vcst_plan_to_json(const struct VcstPlan *plan, char **out);

/**
 * # Safety
 * `scenario` must come from this library and not be freed twice.
 */
void vcst_scenario_free(struct VcstScenario *scenario);

/**
 * # Safety
 * `plan` must come from this library and not be freed twice.
 */
void vcst_plan_free(struct VcstPlan *plan);

/**
 * # Safety
 * `s` must be a string returned by this library and not be freed twice.
 */
void vcst_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* VCST_FFI_H */
