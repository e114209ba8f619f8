#ifndef SMPLPIX_H
#define SMPLPIX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SPX_API __declspec(dllexport)
#else
#define SPX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spx_status {
  SPX_OK = 0,
  SPX_ERR_PARAMETER = 1,
  SPX_ERR_DEGENERATE_SKINNING = 2,
  SPX_ERR_TOPOLOGY = 3,
  SPX_ERR_PARSE = 4,
  SPX_ERR_IO = 5,
  SPX_ERR_FORMAT = 6,
  SPX_ERR_STATE = 7,
  SPX_ERR_INTERNAL = 8
} spx_status;

typedef struct spx_model spx_model;
typedef struct spx_mesh spx_mesh;
typedef struct spx_camera spx_camera;
typedef struct spx_image spx_image;
typedef struct spx_poses spx_poses;

/* Message of the last failed call on this thread, "" if none. */
SPX_API const char* spx_last_error(void);
SPX_API const char* spx_status_name(spx_status status);
SPX_API const char* spx_version(void);

/* ---- body model ---- */

typedef struct spx_model_info {
  size_t vertex_count;
  size_t joint_count;
  size_t shape_dims;
  size_t face_count;
  int has_colors;
  int has_uv;
} spx_model_info;

SPX_API spx_status spx_model_load(const char* path, spx_model** out);
SPX_API spx_status spx_model_save(const spx_model* model, const char* path);
/* Procedural capsule person; height <= 0 selects the default. */
SPX_API spx_status spx_model_synth(uint64_t seed, double height, spx_model** out);
SPX_API void spx_model_free(spx_model* model);
SPX_API spx_status spx_model_get_info(const spx_model* model, spx_model_info* out);

/* theta holds 3 * joint_count axis-angle values; beta holds shape_dims values.
   Either may be NULL for zeros. The result carries the model's vertex colors
   (mid gray when the model has none). */
SPX_API spx_status spx_model_pose(const spx_model* model, const double* beta, size_t beta_len,
                                  const double* theta, size_t theta_len, spx_mesh** out);
/* Personalized template from a registered mesh in pose theta. */
SPX_API spx_status spx_model_unpose(const spx_model* model, const spx_mesh* posed, const double* theta,
                                    size_t theta_len, spx_mesh** out);
SPX_API spx_status spx_model_repose(const spx_model* model, const spx_mesh* template_star,
                                    const double* theta, size_t theta_len, spx_mesh** out);
/* Standing pose of the procedural model (arms lowered). theta_len must be 51. */
SPX_API spx_status spx_synth_a_pose(double* theta, size_t theta_len);

/* ---- pose sequences ---- */

SPX_API spx_status spx_poses_load(const char* path, size_t joint_count, spx_poses** out);
SPX_API size_t spx_poses_count(const spx_poses* poses);
SPX_API spx_status spx_poses_get(const spx_poses* poses, size_t frame, double* theta, size_t theta_len);
SPX_API void spx_poses_free(spx_poses* poses);

/* ---- meshes ---- */

SPX_API spx_status spx_mesh_load(const char* path, spx_mesh** out);
/* ".obj" or ".ply"; PLY colors as float. */
SPX_API spx_status spx_mesh_save(const spx_mesh* mesh, const char* path);
/* positions and colors are n x 3 row-major; colors may be NULL (mid gray).
   faces holds 3 * face_count indices and may be NULL for a point set. */
SPX_API spx_status spx_mesh_create(const double* positions, const double* colors, size_t n,
                                   const uint32_t* faces, size_t face_count, spx_mesh** out);
SPX_API void spx_mesh_free(spx_mesh* mesh);
SPX_API size_t spx_mesh_vertex_count(const spx_mesh* mesh);
SPX_API size_t spx_mesh_face_count(const spx_mesh* mesh);
/* Copy-out accessors; len must equal 3 * count. */
SPX_API spx_status spx_mesh_get_positions(const spx_mesh* mesh, double* out, size_t len);
SPX_API spx_status spx_mesh_get_colors(const spx_mesh* mesh, double* out, size_t len);
SPX_API spx_status spx_mesh_get_faces(const spx_mesh* mesh, uint32_t* out, size_t len);
SPX_API spx_status spx_mesh_subdivide(const spx_mesh* mesh, spx_mesh** out);
/* Replaces vertex colors with bilinear texture samples at the mesh's uv. */
SPX_API spx_status spx_mesh_sample_texture(spx_mesh* mesh, const spx_image* texture);

/* ---- cameras ---- */

typedef struct spx_intrinsics {
  double fx, fy, cx, cy;
  int width, height;
} spx_intrinsics;

SPX_API spx_status spx_camera_load(const char* path, spx_camera** out);
SPX_API spx_status spx_camera_save(const spx_camera* cam, const char* path);
/* K and R are 3 x 3 row-major. */
SPX_API spx_status spx_camera_create(const double K[9], const double R[9], const double t[3], int width,
                                     int height, spx_camera** out);
SPX_API spx_status spx_camera_look_at(const double eye[3], const double target[3], const double up[3],
                                      const spx_intrinsics* intrinsics, spx_camera** out);
/* Fills out[0..n) with cameras around target; free each with spx_camera_free. */
SPX_API spx_status spx_camera_rig(int n, double radius, const double target[3], const spx_intrinsics* intrinsics,
                                  spx_camera** out);
SPX_API void spx_camera_free(spx_camera* cam);
SPX_API spx_status spx_camera_size(const spx_camera* cam, int* width, int* height);
/* uvd receives (u, v, depth); *visible is 0 for points at or behind the near plane. */
SPX_API spx_status spx_camera_project(const spx_camera* cam, const double x[3], double uvd[3], int* visible);

/* ---- rendering ---- */

/* threads = 0 uses all hardware threads; outputs never depend on it. */
SPX_API spx_status spx_splat(const spx_mesh* mesh, const spx_camera* cam, unsigned threads, spx_image** out);
SPX_API spx_status spx_normalize_depth(const spx_image* projection, double d_min, double d_max, spx_image** out);
SPX_API spx_status spx_rasterize(const spx_mesh* mesh, const spx_camera* cam, const double background[3],
                                 unsigned threads, spx_image** out);

/* ---- images ---- */

typedef struct spx_image_info {
  int width;
  int height;
  int channels;          /* 4 for projections, 3 for color images */
  int depth_normalized;
} spx_image_info;

/* ".rgbd", ".png" or ".imgf". */
SPX_API spx_status spx_image_load(const char* path, spx_image** out);
SPX_API spx_status spx_image_save(const spx_image* img, const char* path);
SPX_API void spx_image_free(spx_image* img);
SPX_API spx_status spx_image_get_info(const spx_image* img, spx_image_info* out);
/* Row-major interleaved floats, width * height * channels values. */
SPX_API const float* spx_image_data(const spx_image* img);

/* Full-frame PSNR (peak 1) over all channels. mask, when not NULL, holds one
   byte per pixel and restricts the comparison to nonzero entries. */
SPX_API spx_status spx_psnr(const spx_image* a, const spx_image* b, const uint8_t* mask, double* psnr_db,
                            double* mse);

/* ---- datasets ---- */

/* config_json is the dataset config text; relative paths inside it resolve
   against base_dir (may be NULL). Writes out_dir/manifest.json. */
SPX_API spx_status spx_dataset_build(const char* config_json, const char* base_dir, const char* out_dir,
                                     unsigned threads, size_t* entry_count);

#ifdef __cplusplus
}
#endif

#endif
