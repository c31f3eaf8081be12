#ifndef INTRINSICA_H
#define INTRINSICA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum ItxStatus {
  ItxStatus_Ok = 0,
  ItxStatus_InvalidInput = 1,
  ItxStatus_Domain = 2,
  ItxStatus_ExplicitExpansion = 3,
  ItxStatus_InvalidEndpoint = 4,
  ItxStatus_Unreachable = 5,
  ItxStatus_Undefined = 6,
  ItxStatus_Io = 7,
  ItxStatus_Json = 8,
  ItxStatus_NullPointer = 9,
  ItxStatus_Panic = 10,
} ItxStatus;

/**
 * Opaque obstacle-set handle.
 */
typedef struct ItxObstacles ItxObstacles;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *itx_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by an `itx_*` function, or null.
 */
void itx_string_free(char *s);

/**
 * Parses the JSON obstacle interchange format (a rectangle list or a spec).
 * Spec payloads expand up to `limit` rectangles, falling back to the
 * implicit handle.
 *
 * # Safety
 * `json` must be a NUL-terminated UTF-8 string; `out` must be a valid
 * pointer. The returned handle must be released with [`itx_obstacles_free`].
 */
enum ItxStatus itx_obstacles_from_json(const char *json, uint64_t limit, struct ItxObstacles **out);

/**
 * Releases an obstacle handle.
 *
 * # Safety
 * `h` must come from [`itx_obstacles_from_json`] (or be null) and must not
 * be used afterwards.
 */
void itx_obstacles_free(struct ItxObstacles *h);

/**
 * Serializes the obstacle set back to the JSON interchange format.
 *
 * # Safety
 * `h` and `out` must be valid; release the string with [`itx_string_free`].
 */
enum ItxStatus itx_obstacles_to_json(const struct ItxObstacles *h, char **out);

/**
 * Number of explicit rectangles; errors for implicit handles.
 *
 * # Safety
 * `h` and `out` must be valid pointers.
 */
enum ItxStatus itx_obstacles_rect_count(const struct ItxObstacles *h, uint64_t *out);

/**
 * Planar measure and boundary length of the union.
 *
 * # Safety
 * `h`, `out_area`, and `out_boundary` must be valid pointers.
 */
enum ItxStatus itx_obstacles_measures(const struct ItxObstacles *h,
                                      double *out_area,
                                      double *out_boundary);

/**
 * Exact test of whether the closed segment meets the set.
 *
 * # Safety
 * `h` and `out` must be valid pointers; coordinates must be finite.
 */
enum ItxStatus itx_segment_hits(const struct ItxObstacles *h,
                                double x0,
                                double y0,
                                double x1,
                                double y1,
                                bool *out);

/**
 * Exact Euclidean shortest path; writes its length and removability gap.
 *
 * # Safety
 * `h`, `out_length`, and `out_gap` must be valid pointers.
 */
enum ItxStatus itx_esp(const struct ItxObstacles *h,
                       double ax,
                       double ay,
                       double bx,
                       double by,
                       double *out_length,
                       double *out_gap);

/**
 * Perimeter-detour path; writes its length and removability gap.
 *
 * # Safety
 * `h`, `out_length`, and `out_gap` must be valid pointers.
 */
enum ItxStatus itx_detour(const struct ItxObstacles *h,
                          double ax,
                          double ay,
                          double bx,
                          double by,
                          double *out_length,
                          double *out_gap);

/**
 * Exact cone-constrained reachability with slope `slope_num / slope_den`.
 *
 * # Safety
 * `h` and `out` must be valid pointers.
 */
enum ItxStatus itx_cone_reach_feasible(const struct ItxObstacles *h,
                                       double ax,
                                       double ay,
                                       double bx,
                                       double by,
                                       int64_t slope_num,
                                       int64_t slope_den,
                                       bool *out);

/**
 * Exact blocking certificate for the grid family, delta = num/den.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ItxStatus itx_claim1_certificate(int64_t num, int64_t den, bool *out);

/**
 * Monotonicity estimate over a flat sample array laid out as
 * [x1, y1, fx1, fy1, x2, y2, fx2, fy2, ...] with `n` entries of 4 doubles.
 *
 * # Safety
 * `data` must point to `4 * n` doubles; `out_delta_hat` and `out_min_inner`
 * must be valid pointers.
 */
enum ItxStatus itx_delta_infimum(const double *data,
                                 uintptr_t n,
                                 double *out_delta_hat,
                                 double *out_min_inner);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTRINSICA_H */
