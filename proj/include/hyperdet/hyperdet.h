#ifndef HYPERDET_H
#define HYPERDET_H

/* C interface to the radar refinement pipeline. Every call returns an
 * hd_status; on failure hd_last_error() holds a message for the calling
 * thread. Objects are opaque and owned by the caller once created. */

#include <stddef.h>

#if defined(_WIN32)
#define HD_API __declspec(dllexport)
#elif defined(HD_BUILDING_LIBRARY)
#define HD_API __attribute__((visibility("default")))
#else
#define HD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hd_status {
  HD_OK = 0,
  HD_ERR_INVALID_ARGUMENT = 1,
  HD_ERR_CONFIG = 2,
  HD_ERR_MISSING_ARTIFACT = 3,
  HD_ERR_EXTERNAL_ENHANCER = 4,
  HD_ERR_IO = 5,
  HD_ERR_FORMAT = 6,
  HD_ERR_INFEASIBLE = 7,
  HD_ERR_INTERNAL = 8
} hd_status;

typedef struct hd_config hd_config;
typedef struct hd_cloud hd_cloud;
typedef struct hd_grid hd_grid;

typedef struct hd_point {
  double x, y, z;
  double rcs;
  double doppler; /* m/s, positive = receding */
  int sensor_id;
  double t;
} hd_point;

typedef struct hd_grid_spec {
  double x_min, x_max, y_min, y_max;
  int width, height;
} hd_grid_spec;

typedef void (*hd_log_fn)(const char* message, void* user);

HD_API const char* hd_version(void);
HD_API const char* hd_last_error(void);
HD_API const char* hd_status_name(hd_status s);
/* Pass NULL to silence logging. */
HD_API void hd_set_log_callback(hd_log_fn fn, void* user);

/* --- configuration --- */
HD_API hd_status hd_config_create(hd_config** out);
HD_API void hd_config_destroy(hd_config* cfg);
HD_API hd_status hd_config_load(hd_config* cfg, const char* path);
HD_API hd_status hd_config_set(hd_config* cfg, const char* key, const char* value);
/* Copies the value (NUL-terminated, truncated to buf_size) and stores the
 * full length plus one in *needed when non-NULL. buf may be NULL. */
HD_API hd_status hd_config_get(const hd_config* cfg, const char* key, char* buf, size_t buf_size,
                               size_t* needed);
HD_API hd_status hd_config_dump(const hd_config* cfg, char* buf, size_t buf_size, size_t* needed);
HD_API hd_status hd_config_check(const hd_config* cfg);

/* --- pipeline --- */
/* frames: comma-separated keyframe indices, or NULL/"" for all. */
HD_API hd_status hd_run_stage(const hd_config* cfg, const char* stage, const char* frames);
HD_API hd_status hd_run_all(const hd_config* cfg, const char* frames);
/* axes: e.g. "no-accumulation,no-validation,enhancer=passthrough|oracle,threshold=60|200". */
HD_API hd_status hd_run_ablation(const hd_config* cfg, const char* axes);
HD_API hd_status hd_manifest(const char* out_dir, char* buf, size_t buf_size, size_t* needed);

/* --- point clouds --- */
HD_API hd_status hd_cloud_create(const char* frame_id, hd_cloud** out);
HD_API void hd_cloud_destroy(hd_cloud* cloud);
HD_API hd_status hd_cloud_read(const char* path, hd_cloud** out);
HD_API hd_status hd_cloud_write(const hd_cloud* cloud, const char* path);
HD_API size_t hd_cloud_size(const hd_cloud* cloud);
HD_API const char* hd_cloud_frame(const hd_cloud* cloud);
HD_API hd_status hd_cloud_get(const hd_cloud* cloud, size_t index, hd_point* out);
HD_API hd_status hd_cloud_push(hd_cloud* cloud, const hd_point* p);

/* Cross-sensor plus self-consistency filter over a merged cloud grouped by
 * sensor id. keep_flags, when non-NULL, receives one byte per input point
 * in sensor-major order. */
HD_API hd_status hd_validate(const hd_cloud* merged, double tau_d, double r, int k_min, hd_cloud** kept,
                             unsigned char* keep_flags);

/* --- BEV grids --- */
HD_API void hd_grid_default_spec(hd_grid_spec* spec);
/* spec NULL selects the default geometry. skipped may be NULL. */
HD_API hd_status hd_grid_rasterize(const hd_cloud* cloud, const hd_grid_spec* spec, hd_grid** out,
                                   size_t* skipped);
HD_API void hd_grid_destroy(hd_grid* grid);
HD_API hd_status hd_grid_read(const char* path, hd_grid** out);
HD_API hd_status hd_grid_write(const hd_grid* grid, const char* path);
HD_API hd_status hd_grid_spec_of(const hd_grid* grid, hd_grid_spec* spec);
/* width * height bytes, row 0 = minimum y. */
HD_API const unsigned char* hd_grid_data(const hd_grid* grid);
/* Runs an external enhancer command on a condition grid. */
HD_API hd_status hd_enhance_external(const hd_grid* condition, const char* cmd, const char* work_dir,
                                     hd_grid** out);

/* --- set metrics over interleaved xy arrays --- */
HD_API hd_status hd_chamfer(const double* a_xy, size_t na, const double* b_xy, size_t nb, int root,
                            double* out);
HD_API hd_status hd_hausdorff(const double* a_xy, size_t na, const double* b_xy, size_t nb, double* out);
HD_API hd_status hd_fscore(const double* a_xy, size_t na, const double* b_xy, size_t nb, double tau,
                           double* out);

#ifdef __cplusplus
}
#endif

#endif
