#ifndef UAVTRACK_H
#define UAVTRACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UtStatus {
  UT_STATUS_OK = 0,
  UT_STATUS_NULL_POINTER = 1,
  UT_STATUS_INVALID_ARGUMENT = 2,
  UT_STATUS_NON_MONOTONIC_FRAME = 3,
  UT_STATUS_NUMERICAL = 4,
  UT_STATUS_BUFFER_TOO_SMALL = 5,
  UT_STATUS_UNDEFINED = 6,
  UT_STATUS_PANIC = 7,
} UtStatus;

typedef enum UtSotSource {
  UT_SOT_SOURCE_ONLINE = 0,
  UT_SOT_SOURCE_LOST_PREDICTION = 1,
  UT_SOT_SOURCE_LAST_KNOWN = 2,
  UT_SOT_SOURCE_ABSTAINED = 3,
} UtSotSource;

/**
 * Opaque single-object selector handle.
 */
typedef struct UtSotSelector UtSotSelector;

/**
 * Opaque tracker handle.
 */
typedef struct UtTracker UtTracker;

/**
 * Mirrors the tracker configuration; booleans are 0 or 1.
 */
typedef struct UtTrackerConfig {
  double track_high_thresh;
  double track_low_thresh;
  double new_track_thresh;
  double match_thresh;
  double second_match_thresh;
  double unconfirmed_match_thresh;
  uint32_t track_buffer;
  double min_box_area;
  double proximity_thresh;
  double appearance_thresh;
  double ema_alpha;
  uint8_t with_reid;
  uint8_t with_cmc;
  uint8_t gating;
  double std_weight_position;
  double std_weight_velocity;
} UtTrackerConfig;

typedef struct UtBox {
  double x;
  double y;
  double w;
  double h;
} UtBox;

typedef struct UtDetection {
  struct UtBox bbox;
  double score;
} UtDetection;

typedef struct UtTrack {
  uint64_t id;
  struct UtBox bbox;
  double score;
  /**
   * Frame of the last successful match.
   */
  uint32_t last_frame;
} UtTrack;

typedef struct UtSotReport {
  struct UtBox bbox;
  /**
   * 0 when the selector abstained.
   */
  uint8_t has_box;
  enum UtSotSource source;
  /**
   * 0 when no track id backs the report.
   */
  uint64_t track_id;
} UtSotReport;

/**
 * One frame of SOT scoring input; booleans are 0 or 1.
 */
typedef struct UtSotRecord {
  struct UtBox pred;
  uint8_t has_pred;
  struct UtBox gt;
  uint8_t has_gt;
  uint8_t visible;
} UtSotRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ut_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ut_version(void);

enum UtStatus ut_tracker_config_default(struct UtTrackerConfig *out);

/**
 * Creates a tracker; `config` may be null for the defaults.
 */
enum UtStatus ut_tracker_new(const struct UtTrackerConfig *config, struct UtTracker **out);

void ut_tracker_free(struct UtTracker *tracker);

enum UtStatus ut_tracker_reset(struct UtTracker *tracker);

/**
 * Advances the tracker by one frame.
 *
 * `embeddings` holds `n_dets * dim` values row by row, or is null when the
 * tracker runs without appearance. `affine` holds `a11,a12,tx,a21,a22,ty`
 * mapping the previous frame into this one, or is null. Results are read
 * with [`ut_tracker_online`] and [`ut_tracker_lost`].
 */
enum UtStatus ut_tracker_step(struct UtTracker *tracker,
                              uint32_t frame,
                              const struct UtDetection *dets,
                              size_t n_dets,
                              const double *embeddings,
                              size_t dim,
                              const double *affine);

/**
 * Online tracks of the last step. `*count` always receives the number
 * available; `UT_STATUS_BUFFER_TOO_SMALL` when it exceeds `cap`.
 */
enum UtStatus ut_tracker_online(const struct UtTracker *tracker,
                                struct UtTrack *buf,
                                size_t cap,
                                size_t *count);

/**
 * Lost tracks of the last step with their predicted boxes.
 */
enum UtStatus ut_tracker_lost(const struct UtTracker *tracker,
                              struct UtTrack *buf,
                              size_t cap,
                              size_t *count);

/**
 * Creates a selector whose report before the first track is `fallback`.
 */
enum UtStatus ut_sot_new(uint32_t track_buffer,
                         struct UtBox fallback,
                         uint8_t abstain_when_lost,
                         struct UtSotSelector **out);

void ut_sot_free(struct UtSotSelector *selector);

/**
 * Picks this frame's single-object report from the tracker's last step.
 */
enum UtStatus ut_sot_select(struct UtSotSelector *selector,
                            const struct UtTracker *tracker,
                            struct UtSotReport *out);

enum UtStatus ut_iou(struct UtBox a, struct UtBox b, double *out);

/**
 * SOT accuracy over `n` frame records.
 */
enum UtStatus ut_sot_accuracy(const struct UtSotRecord *records, size_t n, double *out);

enum UtStatus ut_mota(uint64_t fp, uint64_t fn_, uint64_t ids, uint64_t gt, double *out);

/**
 * Robust affine fit. `points` holds `n` rows of `px,py,cx,cy`. Writes
 * `a11,a12,tx,a21,a22,ty` to `out` and, when `inliers` is non-null, one
 * 0/1 flag per row.
 */
enum UtStatus ut_estimate_affine(const double *points,
                                 size_t n,
                                 size_t iterations,
                                 double inlier_thresh,
                                 uint64_t seed,
                                 double *out,
                                 uint8_t *inliers);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UAVTRACK_H */
