#ifndef DGEO_H
#define DGEO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum DgeoStatus {
  DGEO_STATUS_OK = 0,
  DGEO_STATUS_NULL_POINTER = 1,
  DGEO_STATUS_INVALID_ARGUMENT = 2,
  DGEO_STATUS_DEGENERATE = 3,
  DGEO_STATUS_GRID_TOO_LARGE = 4,
  DGEO_STATUS_CAPTURE_MISMATCH = 5,
  DGEO_STATUS_BUFFER_TOO_SHORT = 6,
  DGEO_STATUS_GRID_MISMATCH = 7,
  DGEO_STATUS_OVER_BUDGET = 8,
  DGEO_STATUS_BACKEND = 9,
  DGEO_STATUS_CONFIG = 10,
  DGEO_STATUS_FORMAT = 11,
  DGEO_STATUS_IO = 12,
  DGEO_STATUS_INVALID_UTF8 = 13,
  DGEO_STATUS_OUT_OF_RANGE = 14,
  DGEO_STATUS_PANIC = 15,
} DgeoStatus;

// Grid file encodings accepted by [`dgeo_grid_write`].
typedef enum DgeoGridFormat {
  DGEO_GRID_FORMAT_CSV = 0,
  DGEO_GRID_FORMAT_BINARY = 1,
} DgeoGridFormat;

typedef struct DgeoBackend DgeoBackend;

typedef struct DgeoCapture DgeoCapture;

typedef struct DgeoDetections DgeoDetections;

typedef struct DgeoGrid DgeoGrid;

// Parsed scenario file.
typedef struct DgeoScenario DgeoScenario;

// Snapshots: per-receiver captures and states at one epoch each.
typedef struct DgeoSnapshots DgeoSnapshots;

// One detected emitter.
typedef struct DgeoDetection {
  double lat_deg;
  double lon_deg;
  double alt_m;
  size_t lat_idx;
  size_t lon_idx;
  double score;
  double score_zsigma;
} DgeoDetection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next `dgeo_*` call on the same thread.
const char *dgeo_last_error_message(void);

// Static NUL-terminated crate version.
const char *dgeo_version(void);

// Parses and validates a TOML scenario file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum DgeoStatus dgeo_scenario_load(const char *path, struct DgeoScenario **out);

// Number of receivers, or 0 for NULL.
//
// # Safety
// `sc` must be NULL or a live scenario handle.
size_t dgeo_scenario_receiver_count(const struct DgeoScenario *sc);

// Number of snapshots the scenario simulates, or 0 for NULL.
//
// # Safety
// `sc` must be NULL or a live scenario handle.
size_t dgeo_scenario_snapshot_count(const struct DgeoScenario *sc);

// # Safety
// `sc` must be NULL or a handle not yet freed.
void dgeo_scenario_free(struct DgeoScenario *sc);

// Simulates every snapshot of `sc`.
//
// # Safety
// `sc` must be a live handle; `out` must be writable.
enum DgeoStatus dgeo_scenario_simulate(const struct DgeoScenario *sc, struct DgeoSnapshots **out);

// Writes a capture directory (DGIQ files plus manifest).
//
// # Safety
// `snaps` must be live; `dir` NUL-terminated.
enum DgeoStatus dgeo_snapshots_write_dir(const struct DgeoSnapshots *snaps, const char *dir);

// Loads a capture directory written by [`dgeo_snapshots_write_dir`] or the CLI.
//
// # Safety
// `dir` NUL-terminated; `out` writable.
enum DgeoStatus dgeo_snapshots_read_dir(const char *dir, struct DgeoSnapshots **out);

// # Safety
// `snaps` must be NULL or live.
size_t dgeo_snapshots_count(const struct DgeoSnapshots *snaps);

// Copies the capture of receiver `receiver` in snapshot `snapshot`.
//
// # Safety
// `snaps` live; `out` writable.
enum DgeoStatus dgeo_snapshots_capture(const struct DgeoSnapshots *snaps,
                                       size_t snapshot,
                                       size_t receiver,
                                       struct DgeoCapture **out);

// # Safety
// `snaps` must be NULL or a handle not yet freed.
void dgeo_snapshots_free(struct DgeoSnapshots *snaps);

// Builds a capture from `len` interleaved `(re, im)` pairs.
//
// # Safety
// `iq` must point at `2 * len` doubles; `out` writable.
enum DgeoStatus dgeo_capture_new(const double *iq,
                                 size_t len,
                                 double sample_rate_hz,
                                 double start_time_s,
                                 double center_freq_hz,
                                 struct DgeoCapture **out);

// # Safety
// `path` NUL-terminated; `out` writable.
enum DgeoStatus dgeo_capture_read(const char *path, struct DgeoCapture **out);

// Writes a DGIQ file (samples stored as 32-bit floats).
//
// # Safety
// `cap` live; `path` NUL-terminated.
enum DgeoStatus dgeo_capture_write(const struct DgeoCapture *cap, const char *path);

// Sample count, or 0 for NULL.
//
// # Safety
// `cap` must be NULL or live.
size_t dgeo_capture_len(const struct DgeoCapture *cap);

// Sample rate in Hz, or 0 for NULL.
//
// # Safety
// `cap` must be NULL or live.
double dgeo_capture_sample_rate_hz(const struct DgeoCapture *cap);

// Copies the samples into `iq` as `2 * len` interleaved doubles.
//
// # Safety
// `iq` must have room for `2 * capacity` doubles.
enum DgeoStatus dgeo_capture_samples(const struct DgeoCapture *cap, double *iq, size_t capacity);

// # Safety
// `cap` must be NULL or a handle not yet freed.
void dgeo_capture_free(struct DgeoCapture *cap);

// Correlation magnitude of two equal-length captures at one
// (TDOA in samples, FDOA in Hz) offset.
//
// # Safety
// Captures live; `out` writable.
enum DgeoStatus dgeo_correlate_point(const struct DgeoCapture *y1,
                                     const struct DgeoCapture *y2,
                                     int64_t tdoa_samples,
                                     double fdoa_hz,
                                     double *out);

// Creates a backend by name (`"serial"` or `"parallel"`); `workers == 0`
// uses every core.
//
// # Safety
// `name` NUL-terminated; `out` writable.
enum DgeoStatus dgeo_backend_new(const char *name, size_t workers, struct DgeoBackend **out);

// # Safety
// `b` must be NULL or a handle not yet freed.
void dgeo_backend_free(struct DgeoBackend *b);

// Correlates every snapshot over the scenario grid and returns the
// accumulated grid. `batch_size == 0` keeps the scenario's setting.
//
// # Safety
// Handles live; `out` writable.
enum DgeoStatus dgeo_geolocate(const struct DgeoScenario *sc,
                               const struct DgeoSnapshots *snaps,
                               const struct DgeoBackend *backend,
                               size_t batch_size,
                               struct DgeoGrid **out);

// Writes the grid's (latitude, longitude) shape; zeros for NULL.
//
// # Safety
// `rows` and `cols` must be writable or NULL.
void dgeo_grid_shape(const struct DgeoGrid *g, size_t *rows, size_t *cols);

// Copies the lat-major values into `values`.
//
// # Safety
// `values` must have room for `capacity` doubles.
enum DgeoStatus dgeo_grid_values(const struct DgeoGrid *g, double *values, size_t capacity);

// # Safety
// `g` live; `path` NUL-terminated.
enum DgeoStatus dgeo_grid_write(const struct DgeoGrid *g,
                                const char *path,
                                enum DgeoGridFormat format);

// Reads a DGGR binary grid.
//
// # Safety
// `path` NUL-terminated; `out` writable.
enum DgeoStatus dgeo_grid_read(const char *path, struct DgeoGrid **out);

// Writes a 16-bit P5 graymap heatmap, north up.
//
// # Safety
// `g` live; `path` NUL-terminated.
enum DgeoStatus dgeo_grid_write_heatmap(const struct DgeoGrid *g, const char *path);

// # Safety
// `g` must be NULL or a handle not yet freed.
void dgeo_grid_free(struct DgeoGrid *g);

// Threshold detection on a grid.
//
// # Safety
// `g` live; `out` writable.
enum DgeoStatus dgeo_detect(const struct DgeoGrid *g,
                            double k_sigma,
                            size_t exclusion_radius_cells,
                            struct DgeoDetections **out);

// # Safety
// `d` must be NULL or live.
size_t dgeo_detections_count(const struct DgeoDetections *d);

// Copies detection `index` (0 = strongest) into `out`.
//
// # Safety
// `d` live; `out` writable.
enum DgeoStatus dgeo_detections_get(const struct DgeoDetections *d,
                                    size_t index,
                                    struct DgeoDetection *out);

// # Safety
// `d` must be NULL or a handle not yet freed.
void dgeo_detections_free(struct DgeoDetections *d);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DGEO_H */
