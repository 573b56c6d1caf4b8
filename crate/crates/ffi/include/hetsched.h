#ifndef HETSCHED_H
#define HETSCHED_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum HsStatus {
  HS_STATUS_OK = 0,
  HS_STATUS_NULL_POINTER = 1,
  HS_STATUS_INVALID_ARGUMENT = 2,
  HS_STATUS_PARSE = 3,
  HS_STATUS_NON_TERMINATING = 4,
  HS_STATUS_ENUMERATION_CAP = 5,
  HS_STATUS_PANIC = 6,
} HsStatus;

typedef enum HsMode {
  HS_MODE_WEIGHTED = 0,
  HS_MODE_UNWEIGHTED = 1,
} HsMode;

/**
 * An instance under construction: machines, jobs and a mode.
 */
typedef struct HsInstance HsInstance;

/**
 * A power function.
 */
typedef struct HsPower HsPower;

typedef struct HsMetrics {
  double fractional_weighted_flow;
  double integer_weighted_flow;
  double energy;
  /**
   * Fractional flow plus energy (weighted) or integer flow plus energy (unweighted).
   */
  double objective;
} HsMetrics;

typedef struct HsVerifySummary {
  uint64_t checks_passed;
  uint64_t checks_total;
  bool all_passed;
} HsVerifySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *hs_last_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void hs_string_free(char *s);

/**
 * `P(s) = s^alpha`, `alpha > 1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HsStatus hs_power_poly(double alpha, struct HsPower **out);

/**
 * Polynomial with `coefficients[k]` on `s^k`.
 *
 * # Safety
 * `coefficients` must point to `len` doubles; `out` must be valid for writes.
 */
enum HsStatus hs_power_affine(const double *coefficients, uintptr_t len, struct HsPower **out);

/**
 * Piecewise-linear table from `len` interleaved `(speed, power)` pairs.
 *
 * # Safety
 * `pairs` must point to `2 * len` doubles; `out` must be valid for writes.
 */
enum HsStatus hs_power_table(const double *pairs, uintptr_t len, struct HsPower **out);

/**
 * # Safety
 * `power` must come from an `hs_power_*` constructor and not have been freed.
 */
void hs_power_free(struct HsPower *power);

/**
 * Power drawn at speed `s`.
 *
 * # Safety
 * `power` must be a live handle; `out` must be valid for writes.
 */
enum HsStatus hs_power_eval(const struct HsPower *power, double s, double *out);

/**
 * Speed reached with power `y`.
 *
 * # Safety
 * `power` must be a live handle; `out` must be valid for writes.
 */
enum HsStatus hs_power_speed(const struct HsPower *power, double y, double *out);

/**
 * Empty instance.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HsStatus hs_instance_new(enum HsMode mode, struct HsInstance **out);

/**
 * Instance from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum HsStatus hs_instance_from_json(const char *json, struct HsInstance **out);

/**
 * JSON form of the instance; free with [`hs_string_free`].
 *
 * # Safety
 * `instance` must be a live handle; `out` must be valid for writes.
 */
enum HsStatus hs_instance_to_json(const struct HsInstance *instance, char **out);

/**
 * # Safety
 * `instance` must come from this library and not have been freed.
 */
void hs_instance_free(struct HsInstance *instance);

/**
 * Appends a copy of `power` as the next machine.
 *
 * # Safety
 * Both handles must be live.
 */
enum HsStatus hs_instance_add_machine(struct HsInstance *instance, const struct HsPower *power);

/**
 * Appends a job. Unweighted instances need `weight == 1`.
 *
 * # Safety
 * `instance` must be a live handle.
 */
enum HsStatus hs_instance_add_job(struct HsInstance *instance,
                                  uint64_t id,
                                  double release,
                                  double size,
                                  double weight);

/**
 * Runs the online policy at `speedup >= 1`.
 *
 * # Safety
 * `instance` must be a live handle; `out` must be valid for writes.
 */
enum HsStatus hs_simulate(const struct HsInstance *instance, double speedup, struct HsMetrics *out);

/**
 * Runs every check at `epsilon > 0` against the proxy and `adversaries`
 * random assignments drawn from `seed`. `report_json` may be null; otherwise
 * it receives the full report, to be freed with [`hs_string_free`].
 *
 * # Safety
 * `instance` must be a live handle; `summary` must be valid for writes;
 * `report_json` must be null or valid for writes.
 */
enum HsStatus hs_verify(const struct HsInstance *instance,
                        double epsilon,
                        uint64_t seed,
                        uintptr_t adversaries,
                        struct HsVerifySummary *summary,
                        char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HETSCHED_H */
