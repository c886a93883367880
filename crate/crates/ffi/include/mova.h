#ifndef MOVA_H
#define MOVA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MovaKind {
  MOVA_KIND_SMA = 0,
  MOVA_KIND_WMA = 1,
  MOVA_KIND_EMA = 2,
} MovaKind;

/**
 * Result code of every fallible call.
 */
typedef enum MovaStatus {
  MOVA_STATUS_OK = 0,
  MOVA_STATUS_NULL_POINTER = 1,
  MOVA_STATUS_INVALID_UTF8 = 2,
  MOVA_STATUS_NON_POSITIVE_PERIOD = 3,
  MOVA_STATUS_UNKNOWN_COLUMN = 4,
  MOVA_STATUS_PARSE_ERROR = 5,
  MOVA_STATUS_BUFFER_TOO_SMALL = 6,
  MOVA_STATUS_IO = 7,
} MovaStatus;

/**
 * Opaque loaded frame.
 */
typedef struct MovaFrame MovaFrame;

/**
 * Opaque streaming average.
 */
typedef struct MovaStream MovaStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mova_last_error_message(void);

/**
 * Parses CSV bytes into a frame. `label` may be NULL.
 */
enum MovaStatus mova_frame_from_csv(const uint8_t *data,
                                    size_t len,
                                    const char *label,
                                    struct MovaFrame **out);

/**
 * Loads a CSV file into a frame.
 */
enum MovaStatus mova_frame_from_path(const char *path, struct MovaFrame **out);

void mova_frame_free(struct MovaFrame *frame);

/**
 * Number of rows, or 0 for NULL.
 */
size_t mova_frame_row_count(const struct MovaFrame *frame);

/**
 * Copies column `name` into `out` (missing values as NaN). `out_len` must be
 * at least the row count.
 */
enum MovaStatus mova_frame_column(const struct MovaFrame *frame,
                                  const char *name,
                                  double *out,
                                  size_t out_len);

/**
 * Computes an average over a frame column into `out` (length >= rows).
 * `column` may be NULL for Close.
 */
enum MovaStatus mova_frame_indicator(const struct MovaFrame *frame,
                                     enum MovaKind kind,
                                     uint32_t period,
                                     const char *column,
                                     double *out,
                                     size_t out_len);

/**
 * Batch average of `len` values into `out` (also `len` long). Non-finite
 * inputs count as missing.
 */
enum MovaStatus mova_moving_average(enum MovaKind kind,
                                    const double *values,
                                    size_t len,
                                    uint32_t period,
                                    double *out);

enum MovaStatus mova_stream_new(enum MovaKind kind, uint32_t period, struct MovaStream **out);

/**
 * Pushes one value; `*out` receives the average or NaN while undefined.
 */
enum MovaStatus mova_stream_push(struct MovaStream *stream, double value, double *out);

void mova_stream_free(struct MovaStream *stream);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOVA_H */
