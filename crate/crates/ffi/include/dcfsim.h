#ifndef DCFSIM_H
#define DCFSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum DcfsimStatus {
  DCFSIM_STATUS_OK = 0,
  DCFSIM_STATUS_NULL_POINTER = 1,
  DCFSIM_STATUS_INVALID_INPUT = 2,
  DCFSIM_STATUS_PARSE = 3,
  DCFSIM_STATUS_CONFIG = 4,
  DCFSIM_STATUS_IO = 5,
  /**
   * The simulated protocol broke one of its invariants.
   */
  DCFSIM_STATUS_FAULT = 6,
  DCFSIM_STATUS_OUT_OF_RANGE = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  DCFSIM_STATUS_PANIC = 8,
} DcfsimStatus;

/**
 * Opaque result handle.
 */
typedef struct DcfsimResult DcfsimResult;

/**
 * Opaque scenario handle.
 */
typedef struct DcfsimScenario DcfsimScenario;

/**
 * Per-flow results, measured inside the scenario's measurement window.
 */
typedef struct DcfsimFlowStats {
  uint32_t src;
  uint32_t dst;
  uint32_t payload;
  double throughput_bps;
  double share;
  uint64_t delivered_bytes;
  uint64_t captures;
  uint64_t collisions;
  uint64_t retry_drops;
  uint64_t queue_drops;
} DcfsimFlowStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *dcfsim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dcfsim_version(void);

/**
 * Parse a scenario from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum DcfsimStatus dcfsim_scenario_from_toml(const char *toml, struct DcfsimScenario **out);

/**
 * Load a scenario from a TOML file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DcfsimStatus dcfsim_scenario_from_file(const char *path, struct DcfsimScenario **out);

/**
 * Load a built-in scenario ("baseline_single_flow", "fig6_analog",
 * "fig8_capture").
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum DcfsimStatus dcfsim_scenario_preset(const char *name, struct DcfsimScenario **out);

/**
 * Release a scenario. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void dcfsim_scenario_free(struct DcfsimScenario *s);

/**
 * Set the layout distance used by polar-placed nodes, in meters.
 *
 * # Safety
 * `s` must be a live scenario handle.
 */
enum DcfsimStatus dcfsim_scenario_set_distance(struct DcfsimScenario *s, double meters);

/**
 * # Safety
 * `s` must be a live scenario handle.
 */
enum DcfsimStatus dcfsim_scenario_set_seed(struct DcfsimScenario *s, uint64_t seed);

/**
 * # Safety
 * `s` must be a live scenario handle.
 */
enum DcfsimStatus dcfsim_scenario_set_duration(struct DcfsimScenario *s, double seconds);

/**
 * Enable (non-zero) or disable Rayleigh fading.
 *
 * # Safety
 * `s` must be a live scenario handle.
 */
enum DcfsimStatus dcfsim_scenario_set_fading(struct DcfsimScenario *s, bool enabled);

/**
 * # Safety
 * `s` must be a live scenario handle.
 */
enum DcfsimStatus dcfsim_scenario_set_eifs(struct DcfsimScenario *s, bool enabled);

/**
 * Frames larger than `bytes` use RTS/CTS; 0 forces it for every frame.
 *
 * # Safety
 * `s` must be a live scenario handle.
 */
enum DcfsimStatus dcfsim_scenario_set_rts_threshold(struct DcfsimScenario *s, uint32_t bytes);

/**
 * Serialize the scenario, with defaults filled in, as TOML. Release the
 * string with [`dcfsim_string_free`].
 *
 * # Safety
 * `s` must be a live scenario handle; `out` must be writable.
 */
enum DcfsimStatus dcfsim_scenario_to_toml(const struct DcfsimScenario *s, char **out);

/**
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void dcfsim_string_free(char *p);

/**
 * Run the scenario to completion.
 *
 * # Safety
 * `s` must be a live scenario handle; `out` must be writable.
 */
enum DcfsimStatus dcfsim_run(const struct DcfsimScenario *s, struct DcfsimResult **out);

/**
 * # Safety
 * `r` must come from this library and not be used afterwards.
 */
void dcfsim_result_free(struct DcfsimResult *r);

/**
 * Aggregate throughput in bits/s; NaN for a NULL handle.
 *
 * # Safety
 * `r` must be NULL or a live result handle.
 */
double dcfsim_result_total_throughput(const struct DcfsimResult *r);

/**
 * Number of flows; 0 for a NULL handle.
 *
 * # Safety
 * `r` must be NULL or a live result handle.
 */
size_t dcfsim_result_flow_count(const struct DcfsimResult *r);

/**
 * Copy flow `index`'s statistics into `out`.
 *
 * # Safety
 * `r` must be a live result handle; `out` must be writable.
 */
enum DcfsimStatus dcfsim_result_flow(const struct DcfsimResult *r,
                                     size_t index,
                                     struct DcfsimFlowStats *out);

/**
 * Mean received power (W) at `meters` under the two-ray ground model with
 * the default radio.
 *
 * # Safety
 * `out` must be writable.
 */
enum DcfsimStatus dcfsim_two_ray_pr(double meters, double *out);

/**
 * Distance (m) at which the default radio's mean power falls to
 * `threshold_w`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DcfsimStatus dcfsim_get_dist(double threshold_w, double *out);

/**
 * Default reception threshold (W), giving a 250 m range.
 */
double dcfsim_default_rx_thresh(void);

/**
 * Default carrier-sense threshold (W), giving a 550 m range.
 */
double dcfsim_default_cs_thresh(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DCFSIM_H */
