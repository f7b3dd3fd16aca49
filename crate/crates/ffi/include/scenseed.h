#ifndef SCENSEED_H
#define SCENSEED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum ScenseedStatus {
  SCENSEED_STATUS_OK = 0,
  SCENSEED_STATUS_NULL_POINTER = 1,
  SCENSEED_STATUS_INVALID_UTF8 = 2,
  SCENSEED_STATUS_PARSE = 3,
  SCENSEED_STATUS_VALIDATION = 4,
  SCENSEED_STATUS_ISOLATED_START = 5,
  SCENSEED_STATUS_MAP_TOO_SMALL = 6,
  SCENSEED_STATUS_OFF_ROAD = 7,
  SCENSEED_STATUS_NON_FINITE_LOSS = 8,
  SCENSEED_STATUS_INTEGRITY = 9,
  SCENSEED_STATUS_CONFIG = 10,
  SCENSEED_STATUS_CHECKPOINT = 11,
  SCENSEED_STATUS_IO = 12,
  SCENSEED_STATUS_BUFFER_TOO_SMALL = 13,
  SCENSEED_STATUS_PANIC = 14,
} ScenseedStatus;

/**
 * Hazard model handle.
 */
typedef struct ScenseedModel ScenseedModel;

/**
 * Road network handle.
 */
typedef struct ScenseedNetwork ScenseedNetwork;

/**
 * Headline metrics of a campaign, averaged over repetitions. Optional
 * metrics are NaN when undefined.
 */
typedef struct ScenseedSummary {
  double violation_rate;
  double top10_rounds;
  double parameter_distance;
  double map_coverage;
  double trajectory_coverage;
} ScenseedSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *scenseed_last_error(void);

/**
 * Parses a map document (JSON text).
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum ScenseedStatus scenseed_network_from_json(const char *json, struct ScenseedNetwork **out);

/**
 * Builds one of the generated maps: `straight`, `grid4`, `ring` or `rural`.
 *
 * # Safety
 * `name` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum ScenseedStatus scenseed_network_builtin(const char *name, struct ScenseedNetwork **out);

/**
 * # Safety
 * `network` must come from this library and not be freed twice. Null is ignored.
 */
void scenseed_network_free(struct ScenseedNetwork *network);

/**
 * Counts of lanes, spawn points and waypoints.
 *
 * # Safety
 * `network` must be a live handle; the out pointers may be null.
 */
enum ScenseedStatus scenseed_network_counts(const struct ScenseedNetwork *network,
                                            size_t *lanes,
                                            size_t *spawn_points,
                                            size_t *waypoints);

/**
 * Freshly initialized hazard model, deterministic in `seed`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ScenseedStatus scenseed_model_new(uint64_t seed, struct ScenseedModel **out);

/**
 * Loads a model from checkpoint bytes.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes and `out` be a valid pointer.
 */
enum ScenseedStatus scenseed_model_from_checkpoint(const uint8_t *bytes,
                                                   size_t len,
                                                   struct ScenseedModel **out);

/**
 * Writes the checkpoint into `buf`. `written` always receives the required
 * size; `SCENSEED_STATUS_BUFFER_TOO_SMALL` is returned when `cap` is short.
 *
 * # Safety
 * `model` must be a live handle, `buf` writable for `cap` bytes (may be null
 * when `cap` is 0) and `written` a valid pointer.
 */
enum ScenseedStatus scenseed_model_checkpoint(const struct ScenseedModel *model,
                                              uint8_t *buf,
                                              size_t cap,
                                              size_t *written);

/**
 * # Safety
 * `model` must come from this library and not be freed twice. Null is ignored.
 */
void scenseed_model_free(struct ScenseedModel *model);

/**
 * Hazard probability of a 5-element feature vector.
 *
 * # Safety
 * `features` must point to 5 doubles and `out` be a valid pointer.
 */
enum ScenseedStatus scenseed_model_forward(const struct ScenseedModel *model,
                                           const double *features,
                                           double *out);

/**
 * Gradient of the hazard with respect to the 5 features.
 *
 * # Safety
 * `features` must point to 5 doubles and `grad` to 5 writable doubles.
 */
enum ScenseedStatus scenseed_model_input_grad(const struct ScenseedModel *model,
                                              const double *features,
                                              double *grad);

/**
 * Runs a campaign described by TOML text and writes its artifacts to `out_dir`.
 * A relative map path in the config resolves against `out_dir`'s parent.
 *
 * # Safety
 * `config_toml` and `out_dir` must be valid NUL-terminated strings; `summary`
 * may be null.
 */
enum ScenseedStatus scenseed_run_campaign(const char *config_toml,
                                          const char *out_dir,
                                          struct ScenseedSummary *summary);

/**
 * Re-checks every record of an episode log against `network`. `records`
 * receives the number of records checked.
 *
 * # Safety
 * `jsonl_path` must be a valid NUL-terminated string, `network` a live handle;
 * `records` may be null.
 */
enum ScenseedStatus scenseed_replay_log(const char *jsonl_path,
                                        const struct ScenseedNetwork *network,
                                        double motionless_seconds,
                                        size_t *records);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCENSEED_H */
