/* cubeval: oriented-cuboid IoU kernels and 3D detection evaluation.
 *
 * C API of the shared library. All functions return a status code; on
 * failure cubeval_last_error() describes the problem (thread-local).
 * Strings and buffers returned through out-parameters are owned by the
 * caller and released with the matching *_free function.
 *
 * A cuboid is 15 doubles: center x,y,z (meters), dims w,h,l (meters),
 * rotation as a row-major 3x3 object-to-camera matrix.
 */
#ifndef CUBEVAL_H
#define CUBEVAL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define CUBEVAL_BOX_DOUBLES 15

typedef enum cubeval_status {
  CUBEVAL_OK = 0,
  CUBEVAL_ERROR_INVALID_ARGUMENT = 1,
  CUBEVAL_ERROR_DATA = 2, /* schema, referential, geometry or io problems */
  CUBEVAL_ERROR_INTERNAL = 3
} cubeval_status;

const char* cubeval_version(void);

/* Message for the most recent failure on this thread; empty when none. */
const char* cubeval_last_error(void);

/* ------------------------------------------------------------------ IoU */

cubeval_status cubeval_iou3d(const double* box_a, const double* box_b, double* out_iou);

cubeval_status cubeval_iou3d_approx(const double* box_a, const double* box_b,
                                    double* out_iou);

/* out must hold count_a * count_b doubles (row-major, rows = boxes_a).
 * threads == 0 picks hardware concurrency; results are identical for any
 * thread count. approx != 0 switches to the ground-plane approximation. */
cubeval_status cubeval_iou3d_batched(const double* boxes_a, size_t count_a,
                                     const double* boxes_b, size_t count_b, int threads,
                                     int approx, double* out);

cubeval_status cubeval_iou3d_mc(const double* box_a, const double* box_b,
                                uint64_t samples, uint64_t seed, double* out_estimate,
                                double* out_std_error);

/* Seeded benchmark boxes; out must hold count * CUBEVAL_BOX_DOUBLES. */
cubeval_status cubeval_random_cuboids(uint64_t seed, size_t count, double* out);

/* Reads a cuboid-list JSON file into a malloc'd flat array. */
cubeval_status cubeval_load_cuboids(const char* path, double** out_boxes,
                                    size_t* out_count);
void cubeval_buffer_free(double* buffer);

/* ----------------------------------------------------------- evaluation */

typedef struct cubeval_report cubeval_report;

/* config_json may be NULL for defaults. Recognized keys: "tau_min",
 * "tau_max", "tau_step" (or explicit "taus" array), "occlusion_threshold",
 * "truncation_threshold", "tiny_rel_height", "near_max", "medium_max",
 * "threads". */
cubeval_status cubeval_evaluate_files(const char* gt_path, const char* pred_path,
                                      const char* config_json, cubeval_report** out);

cubeval_status cubeval_report_json(const cubeval_report* report, char** out);
cubeval_status cubeval_report_csv(const cubeval_report* report, char** out);
cubeval_status cubeval_report_table(const cubeval_report* report, char** out);
/* Newline-separated loader warnings (rotation repairs, estimated
 * intrinsics); empty string when none. */
cubeval_status cubeval_report_warnings(const cubeval_report* report, char** out);
void cubeval_report_free(cubeval_report* report);

/* ------------------------------------------------------------ statistics */

typedef struct cubeval_stats cubeval_stats;

/* config_json keys: "center_bins", "topview_bins", "size_bins",
 * "depth_min", "depth_max". NULL for defaults. */
cubeval_status cubeval_stats_files(const char* dataset_path, const char* config_json,
                                   cubeval_stats** out);

cubeval_status cubeval_stats_json(const cubeval_stats* stats, char** out);

/* histogram is one of "center_xy", "topview_xz", "rel_size", "categories". */
cubeval_status cubeval_stats_csv(const cubeval_stats* stats, const char* histogram,
                                 char** out);
cubeval_status cubeval_stats_warnings(const cubeval_stats* stats, char** out);
void cubeval_stats_free(cubeval_stats* stats);

void cubeval_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CUBEVAL_H */
