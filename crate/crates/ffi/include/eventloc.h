#ifndef EVENTLOC_H
#define EVENTLOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define EVENTLOC_METHOD_CENTROID 0

#define EVENTLOC_METHOD_GIPSY 1

typedef enum EventlocStatus {
  EVENTLOC_STATUS_OK = 0,
  EVENTLOC_STATUS_NULL_POINTER = 1,
  EVENTLOC_STATUS_INVALID_ARGUMENT = 2,
  EVENTLOC_STATUS_IO = 3,
  EVENTLOC_STATUS_NO_CANDIDATES = 4,
  EVENTLOC_STATUS_DEGENERATE = 5,
  EVENTLOC_STATUS_PANIC = 6,
} EventlocStatus;

/**
 * Place-name dictionary loaded from a gazetteer TSV file.
 */
typedef struct EventlocGazetteer EventlocGazetteer;

/**
 * Configured backends and pipeline settings loaded from a JSON config.
 */
typedef struct EventlocPipeline EventlocPipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *eventloc_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void eventloc_string_free(char *s);

/**
 * WGS84 geodetic (degrees) to ECEF (metres).
 *
 * # Safety
 * Output pointers must be valid for writes.
 */
enum EventlocStatus eventloc_geodetic_to_ecef(double lat,
                                              double lon,
                                              double *x,
                                              double *y,
                                              double *z);

/**
 * ECEF (metres) to WGS84 geodetic (degrees).
 *
 * # Safety
 * Output pointers must be valid for writes.
 */
enum EventlocStatus eventloc_ecef_to_geodetic(double x,
                                              double y,
                                              double z,
                                              double *lat,
                                              double *lon);

/**
 * Loads a gazetteer TSV file into `*out`.
 *
 * # Safety
 * `path` must be a valid string and `out` valid for writes.
 */
enum EventlocStatus eventloc_gazetteer_load(const char *path, struct EventlocGazetteer **out);

/**
 * Number of entries, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t eventloc_gazetteer_len(const struct EventlocGazetteer *g);

/**
 * # Safety
 * `g` must be null or a handle from `eventloc_gazetteer_load` not yet freed.
 */
void eventloc_gazetteer_free(struct EventlocGazetteer *g);

/**
 * Extracts places from `text` and locates them with
 * `EVENTLOC_METHOD_CENTROID` or `EVENTLOC_METHOD_GIPSY`.
 *
 * # Safety
 * `g` must be a live handle, `text` a valid string, outputs valid for writes.
 */
enum EventlocStatus eventloc_locate(const struct EventlocGazetteer *g,
                                    const char *text,
                                    uint32_t method,
                                    double *lat,
                                    double *lon);

/**
 * Yield in percent and, when `baseline` is non-null, the improvement over
 * `*baseline` detections (NaN otherwise).
 *
 * # Safety
 * `baseline` must be null or readable; outputs valid for writes.
 */
enum EventlocStatus eventloc_compute_metrics(uint64_t detections,
                                             uint64_t total,
                                             const uint64_t *baseline,
                                             double *yield_pct,
                                             double *improvement);

/**
 * Builds backends from a JSON run configuration file.
 *
 * # Safety
 * `config_path` must be a valid string and `out` valid for writes.
 */
enum EventlocStatus eventloc_pipeline_open(const char *config_path, struct EventlocPipeline **out);

/**
 * # Safety
 * `p` must be null or a handle from `eventloc_pipeline_open` not yet freed.
 */
void eventloc_pipeline_free(struct EventlocPipeline *p);

/**
 * Runs one article (a JSON object) with `method` ("centroid", "gipsy" or
 * "agentic") and stores the result JSON in `*result_json`. The run's own
 * outcome, including infrastructure errors, is reported in that JSON.
 * The handle may be shared across threads.
 *
 * # Safety
 * `p` must be a live handle, strings valid, `result_json` valid for writes.
 */
enum EventlocStatus eventloc_pipeline_run_article(const struct EventlocPipeline *p,
                                                  const char *article_json,
                                                  const char *method,
                                                  char **result_json);

/**
 * Reads a manifest file and stores its statistics as JSON in `*stats_json`.
 *
 * # Safety
 * `path` must be a valid string and `stats_json` valid for writes.
 */
enum EventlocStatus eventloc_dataset_stats(const char *path, char **stats_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVENTLOC_H */
