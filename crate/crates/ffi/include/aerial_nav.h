#ifndef AERIAL_NAV_H
#define AERIAL_NAV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AnStatus {
  AN_STATUS_OK = 0,
  AN_STATUS_NULL_POINTER = 1,
  AN_STATUS_INVALID_ARGUMENT = 2,
  AN_STATUS_OUT_OF_RANGE = 3,
  AN_STATUS_BEHIND_CAMERA = 4,
  AN_STATUS_IO = 5,
  AN_STATUS_PARSE = 6,
  AN_STATUS_BUFFER_TOO_SMALL = 7,
  AN_STATUS_INTERNAL = 99,
} AnStatus;

typedef enum AnTermination {
  AN_TERMINATION_SUCCESS = 0,
  AN_TERMINATION_COLLISION = 1,
  AN_TERMINATION_TIMEOUT = 2,
  AN_TERMINATION_PLANNER_FAILURE = 3,
  AN_TERMINATION_REPLAN_LIMIT = 4,
} AnTermination;

/**
 * Opaque pinhole camera.
 */
typedef struct AnCamera AnCamera;

/**
 * Opaque finished episode with its trajectory log.
 */
typedef struct AnEpisode AnEpisode;

/**
 * Body-frame displacement: right, forward, up, meters.
 */
typedef struct AnDisplacement {
  double sx;
  double sy;
  double sz;
} AnDisplacement;

typedef struct AnPrimitives {
  /**
   * Radians, positive turns right.
   */
  double delta_yaw;
  double delta_pitch;
  double delta_throttle;
} AnPrimitives;

/**
 * One rc command held for `duration` seconds.
 */
typedef struct AnCommand {
  double roll;
  double pitch;
  double throttle;
  double yaw_rate;
  double duration;
} AnCommand;

typedef struct AnMetrics {
  bool success;
  double completion_time;
  double path_length;
  uint32_t replans;
  uint64_t ticks;
  enum AnTermination termination;
} AnMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Free with
 * [`an_string_free`].
 */
char *an_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void an_string_free(char *s);

/**
 * Creates a camera from its size and half fields of view in degrees.
 * Returns null on invalid input.
 */
struct AnCamera *an_camera_new(uint32_t width,
                               uint32_t height,
                               double half_fov_h_deg,
                               double half_fov_v_deg);

/**
 * 960x720 camera with 41.3 and 31.0 degree half fields of view.
 */
struct AnCamera *an_camera_default(void);

/**
 * # Safety
 * `cam` must be null or a handle from `an_camera_*`, freed once.
 */
void an_camera_free(struct AnCamera *cam);

/**
 * Pixel coordinates to normalized image coordinates in [-1, 1].
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum AnStatus an_normalize_pixel(const struct AnCamera *cam,
                                 double u,
                                 double v,
                                 double *out_u,
                                 double *out_v);

/**
 * Lifts a normalized image point at forward distance `depth` into the
 * body frame.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum AnStatus an_unproject(const struct AnCamera *cam,
                           double u_norm,
                           double v_norm,
                           double depth,
                           struct AnDisplacement *out);

/**
 * Body-frame point to normalized image coordinates; `out_in_fov` reports
 * whether both lie in [-1, 1].
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum AnStatus an_project(const struct AnCamera *cam,
                         struct AnDisplacement d,
                         double *out_u,
                         double *out_v,
                         bool *out_in_fov);

/**
 * Step length in meters for a distance label under the default curve.
 *
 * # Safety
 * `out` must be valid or null.
 */
enum AnStatus an_scale_depth(uint32_t label, double *out);

/**
 * Step length for a distance label under an explicit curve.
 *
 * # Safety
 * `out` must be valid or null.
 */
enum AnStatus an_scale_depth_with(double scale,
                                  uint32_t levels,
                                  double exponent,
                                  double min_step,
                                  uint32_t label,
                                  double *out);

/**
 * # Safety
 * `out` must be valid or null.
 */
enum AnStatus an_decompose(struct AnDisplacement d, struct AnPrimitives *out);

/**
 * Builds the rc schedule for `prim` with default speeds and deadbands.
 * Writes up to `capacity` commands into `buf` and the full count into
 * `out_len`; returns `BufferTooSmall` if they did not all fit. Pass a null
 * `buf` with zero capacity to query the length.
 *
 * # Safety
 * `buf` must hold `capacity` commands; `out_len` must be valid.
 */
enum AnStatus an_schedule(struct AnPrimitives prim,
                          struct AnCommand *buf,
                          size_t capacity,
                          size_t *out_len);

/**
 * Flies a scenario file with the oracle planner. `config_path` may be null
 * for defaults. On success `*out` receives a handle to free with
 * [`an_episode_free`].
 *
 * # Safety
 * Paths must be null or NUL-terminated; `out` must be valid.
 */
enum AnStatus an_episode_run(const char *scenario_path,
                             const char *config_path,
                             uint32_t rep,
                             struct AnEpisode **out);

/**
 * # Safety
 * `ep` must be a live episode handle; `out` must be valid.
 */
enum AnStatus an_episode_metrics(const struct AnEpisode *ep, struct AnMetrics *out);

/**
 * Metrics as a JSON object, or null. Free with [`an_string_free`].
 *
 * # Safety
 * `ep` must be null or a live episode handle.
 */
char *an_episode_metrics_json(const struct AnEpisode *ep);

/**
 * Writes the episode's trajectory log as JSONL.
 *
 * # Safety
 * `ep` must be a live episode handle; `path` NUL-terminated.
 */
enum AnStatus an_episode_write_record(const struct AnEpisode *ep, const char *path);

/**
 * # Safety
 * `ep` must be null or a handle from [`an_episode_run`], freed once.
 */
void an_episode_free(struct AnEpisode *ep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AERIAL_NAV_H */
