#include "smplpix/smplpix.h"

#include "smplpix/body_model.hpp"
#include "smplpix/camera.hpp"
#include "smplpix/dataset.hpp"
#include "smplpix/error.hpp"
#include "smplpix/image.hpp"
#include "smplpix/io_util.hpp"
#include "smplpix/mesh_ops.hpp"
#include "smplpix/metrics.hpp"
#include "smplpix/parallel.hpp"
#include "smplpix/raster.hpp"
#include "smplpix/splat.hpp"
#include "smplpix/synth.hpp"

#include <filesystem>
#include <new>
#include <string>
#include <variant>

using namespace smplpix;
namespace fs = std::filesystem;

struct spx_model {
  BodyModel model;
};

struct spx_mesh {
  Mesh mesh;
};

struct spx_camera {
  Camera cam;
};

struct spx_image {
  std::variant<ProjectionImage, RgbImage> img;
};

struct spx_poses {
  std::vector<PoseParams> frames;
};

namespace {

thread_local std::string g_last_error;

spx_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parameter: return SPX_ERR_PARAMETER;
    case ErrorCode::DegenerateSkinning: return SPX_ERR_DEGENERATE_SKINNING;
    case ErrorCode::Topology: return SPX_ERR_TOPOLOGY;
    case ErrorCode::Parse: return SPX_ERR_PARSE;
    case ErrorCode::Io: return SPX_ERR_IO;
    case ErrorCode::Format: return SPX_ERR_FORMAT;
    case ErrorCode::State: return SPX_ERR_STATE;
  }
  return SPX_ERR_INTERNAL;
}

template <typename F>
spx_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return SPX_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SPX_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SPX_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::Parameter, std::string(what) + " is null");
}

unsigned threads_of(unsigned requested) { return resolve_threads(static_cast<int>(requested)); }

ColoredVertexSet colored(const BodyModel& model, Points positions) {
  Points colors = model.colors ? *model.colors : Points::Constant(positions.rows(), 3, 0.5);
  return ColoredVertexSet(std::move(positions), std::move(colors));
}

spx_mesh* new_mesh(const BodyModel& model, ColoredVertexSet verts) {
  auto* m = new spx_mesh;
  m->mesh.verts = std::move(verts);
  m->mesh.faces = model.faces;
  m->mesh.uv = model.uv;
  m->mesh.has_colors = true;
  return m;
}

PoseParams pose_from(const BodyModel& model, const double* theta, size_t len) {
  PoseParams p = PoseParams::zeros(model);
  if (theta == nullptr) return p;
  require(len == static_cast<size_t>(p.theta.size()),
          "theta length " + std::to_string(len) + " != 3 * joint count " + std::to_string(p.theta.size()));
  for (size_t i = 0; i < len; ++i) p.theta[static_cast<Eigen::Index>(i)] = theta[i];
  return p;
}

ShapeParams shape_from(const BodyModel& model, const double* beta, size_t len) {
  ShapeParams s = ShapeParams::zeros(model);
  if (beta == nullptr) return s;
  require(len == static_cast<size_t>(s.beta.size()),
          "beta length " + std::to_string(len) + " != shape dims " + std::to_string(s.beta.size()));
  for (size_t i = 0; i < len; ++i) s.beta[static_cast<Eigen::Index>(i)] = beta[i];
  return s;
}

Intrinsics intrinsics_from(const spx_intrinsics* in) {
  need(in, "intrinsics");
  Intrinsics k;
  k.fx = in->fx;
  k.fy = in->fy;
  k.cx = in->cx;
  k.cy = in->cy;
  k.width = in->width;
  k.height = in->height;
  return k;
}

Eigen::Vector3d vec3(const double* p, const char* what) {
  need(p, what);
  return {p[0], p[1], p[2]};
}

std::string extension(const char* path) { return fs::path(path).extension().string(); }

template <typename T>
void emit(T* value, T** out) {
  *out = value;
}

}  // namespace

extern "C" {

const char* spx_last_error(void) { return g_last_error.c_str(); }

const char* spx_status_name(spx_status status) {
  switch (status) {
    case SPX_OK: return "ok";
    case SPX_ERR_PARAMETER: return "parameter";
    case SPX_ERR_DEGENERATE_SKINNING: return "degenerate_skinning";
    case SPX_ERR_TOPOLOGY: return "topology";
    case SPX_ERR_PARSE: return "parse";
    case SPX_ERR_IO: return "io";
    case SPX_ERR_FORMAT: return "format";
    case SPX_ERR_STATE: return "state";
    case SPX_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* spx_version(void) { return "0.1.0"; }

spx_status spx_model_load(const char* path, spx_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    emit(new spx_model{load_body_model(path)}, out);
  });
}

spx_status spx_model_save(const spx_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    save_body_model(model->model, path);
  });
}

spx_status spx_model_synth(uint64_t seed, double height, spx_model** out) {
  return guarded([&] {
    need(out, "out");
    SynthOptions opts;
    if (height > 0.0) opts.height = height;
    emit(new spx_model{synth_subject(seed, opts).model}, out);
  });
}

void spx_model_free(spx_model* model) { delete model; }

spx_status spx_model_get_info(const spx_model* model, spx_model_info* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const BodyModel& m = model->model;
    out->vertex_count = static_cast<size_t>(m.vertex_count());
    out->joint_count = static_cast<size_t>(m.joint_count());
    out->shape_dims = static_cast<size_t>(m.shape_dims());
    out->face_count = m.faces.size();
    out->has_colors = m.colors.has_value();
    out->has_uv = m.uv.has_value();
  });
}

spx_status spx_model_pose(const spx_model* model, const double* beta, size_t beta_len, const double* theta,
                          size_t theta_len, spx_mesh** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const BodyModel& m = model->model;
    Points posed = pose_mesh(m, shape_from(m, beta, beta_len), pose_from(m, theta, theta_len));
    emit(new_mesh(m, colored(m, std::move(posed))), out);
  });
}

spx_status spx_model_unpose(const spx_model* model, const spx_mesh* posed, const double* theta, size_t theta_len,
                            spx_mesh** out) {
  return guarded([&] {
    need(model, "model");
    need(posed, "posed mesh");
    need(out, "out");
    const BodyModel& m = model->model;
    ColoredVertexSet t = unpose(m, posed->mesh.verts, pose_from(m, theta, theta_len));
    emit(new_mesh(m, std::move(t)), out);
  });
}

spx_status spx_model_repose(const spx_model* model, const spx_mesh* template_star, const double* theta,
                            size_t theta_len, spx_mesh** out) {
  return guarded([&] {
    need(model, "model");
    need(template_star, "template mesh");
    need(out, "out");
    const BodyModel& m = model->model;
    ColoredVertexSet v = repose_subject(template_star->mesh.verts, m, pose_from(m, theta, theta_len));
    emit(new_mesh(m, std::move(v)), out);
  });
}

spx_status spx_synth_a_pose(double* theta, size_t theta_len) {
  return guarded([&] {
    need(theta, "theta");
    const PoseParams p = a_pose();
    require(theta_len == static_cast<size_t>(p.theta.size()), "theta length must be 51");
    for (size_t i = 0; i < theta_len; ++i) theta[i] = p.theta[static_cast<Eigen::Index>(i)];
  });
}

spx_status spx_poses_load(const char* path, size_t joint_count, spx_poses** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    require(joint_count > 0, "joint count must be positive");
    emit(new spx_poses{load_pose_sequence(path, static_cast<Eigen::Index>(joint_count))}, out);
  });
}

size_t spx_poses_count(const spx_poses* poses) { return poses ? poses->frames.size() : 0; }

spx_status spx_poses_get(const spx_poses* poses, size_t frame, double* theta, size_t theta_len) {
  return guarded([&] {
    need(poses, "poses");
    need(theta, "theta");
    require(frame < poses->frames.size(), "frame index out of range");
    const Eigen::VectorXd& t = poses->frames[frame].theta;
    require(theta_len == static_cast<size_t>(t.size()), "theta length mismatch");
    for (size_t i = 0; i < theta_len; ++i) theta[i] = t[static_cast<Eigen::Index>(i)];
  });
}

void spx_poses_free(spx_poses* poses) { delete poses; }

spx_status spx_mesh_load(const char* path, spx_mesh** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    emit(new spx_mesh{load_mesh(path)}, out);
  });
}

spx_status spx_mesh_save(const spx_mesh* mesh, const char* path) {
  return guarded([&] {
    need(mesh, "mesh");
    need(path, "path");
    save_mesh(mesh->mesh, path);
  });
}

spx_status spx_mesh_create(const double* positions, const double* colors, size_t n, const uint32_t* faces,
                           size_t face_count, spx_mesh** out) {
  return guarded([&] {
    need(out, "out");
    require(n == 0 || positions != nullptr, "positions is null");
    require(face_count == 0 || faces != nullptr, "faces is null");
    const auto rows = static_cast<Eigen::Index>(n);
    Points p = rows ? Points(Eigen::Map<const Points>(positions, rows, 3)) : Points(0, 3);
    Points c = colors ? Points(Eigen::Map<const Points>(colors, rows, 3)) : Points::Constant(rows, 3, 0.5);
    ColoredVertexSet verts(std::move(p), std::move(c));
    verts.validate_and_clamp();
    auto m = std::make_unique<spx_mesh>();
    m->mesh.verts = std::move(verts);
    m->mesh.has_colors = colors != nullptr;
    m->mesh.faces.resize(face_count);
    for (size_t f = 0; f < face_count; ++f) {
      for (int k = 0; k < 3; ++k) {
        const uint32_t idx = faces[3 * f + static_cast<size_t>(k)];
        require(idx < n, "face index out of range");
        m->mesh.faces[f][static_cast<size_t>(k)] = idx;
      }
    }
    emit(m.release(), out);
  });
}

void spx_mesh_free(spx_mesh* mesh) { delete mesh; }

size_t spx_mesh_vertex_count(const spx_mesh* mesh) {
  return mesh ? static_cast<size_t>(mesh->mesh.verts.size()) : 0;
}

size_t spx_mesh_face_count(const spx_mesh* mesh) { return mesh ? mesh->mesh.faces.size() : 0; }

spx_status spx_mesh_get_positions(const spx_mesh* mesh, double* out, size_t len) {
  return guarded([&] {
    need(mesh, "mesh");
    need(out, "out");
    const Points& p = mesh->mesh.verts.positions;
    require(len == static_cast<size_t>(p.size()), "output length mismatch");
    std::copy(p.data(), p.data() + p.size(), out);
  });
}

spx_status spx_mesh_get_colors(const spx_mesh* mesh, double* out, size_t len) {
  return guarded([&] {
    need(mesh, "mesh");
    need(out, "out");
    const Points& c = mesh->mesh.verts.colors;
    require(len == static_cast<size_t>(c.size()), "output length mismatch");
    std::copy(c.data(), c.data() + c.size(), out);
  });
}

spx_status spx_mesh_get_faces(const spx_mesh* mesh, uint32_t* out, size_t len) {
  return guarded([&] {
    need(mesh, "mesh");
    need(out, "out");
    const Faces& f = mesh->mesh.faces;
    require(len == 3 * f.size(), "output length mismatch");
    for (size_t i = 0; i < f.size(); ++i)
      for (size_t k = 0; k < 3; ++k) out[3 * i + k] = f[i][k];
  });
}

spx_status spx_mesh_subdivide(const spx_mesh* mesh, spx_mesh** out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(out, "out");
    SubdividedMesh s = subdivide_midpoint(mesh->mesh.verts, mesh->mesh.faces, mesh->mesh.uv);
    auto m = std::make_unique<spx_mesh>();
    m->mesh.verts = std::move(s.verts);
    m->mesh.faces = std::move(s.faces);
    m->mesh.uv = std::move(s.uv);
    m->mesh.has_colors = mesh->mesh.has_colors;
    emit(m.release(), out);
  });
}

spx_status spx_mesh_sample_texture(spx_mesh* mesh, const spx_image* texture) {
  return guarded([&] {
    need(mesh, "mesh");
    need(texture, "texture");
    const auto* tex = std::get_if<RgbImage>(&texture->img);
    require(tex != nullptr, "texture must be a 3-channel image");
    Mesh& m = mesh->mesh;
    ColorSamples s;
    if (!m.wedge_faces.empty())
      s = sample_vertex_colors(*tex, m.wedge_uv, m.wedge_faces, m.faces, m.verts.size());
    else if (m.uv)
      s = sample_vertex_colors(*tex, *m.uv);
    else
      fail(ErrorCode::Parameter, "mesh has no texture coordinates");
    m.verts.colors = std::move(s.colors);
    m.has_colors = true;
  });
}

spx_status spx_camera_load(const char* path, spx_camera** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    emit(new spx_camera{load_camera(path)}, out);
  });
}

spx_status spx_camera_save(const spx_camera* cam, const char* path) {
  return guarded([&] {
    need(cam, "camera");
    need(path, "path");
    save_camera(cam->cam, path);
  });
}

spx_status spx_camera_create(const double K[9], const double R[9], const double t[3], int width, int height,
                             spx_camera** out) {
  return guarded([&] {
    need(K, "K");
    need(R, "R");
    need(out, "out");
    Camera c;
    c.K = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(K);
    c.R = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(R);
    c.t = vec3(t, "t");
    c.width = width;
    c.height = height;
    c.validate();
    emit(new spx_camera{c}, out);
  });
}

spx_status spx_camera_look_at(const double eye[3], const double target[3], const double up[3],
                              const spx_intrinsics* intrinsics, spx_camera** out) {
  return guarded([&] {
    need(out, "out");
    emit(new spx_camera{look_at(vec3(eye, "eye"), vec3(target, "target"), vec3(up, "up"),
                                intrinsics_from(intrinsics))},
         out);
  });
}

spx_status spx_camera_rig(int n, double radius, const double target[3], const spx_intrinsics* intrinsics,
                          spx_camera** out) {
  return guarded([&] {
    need(out, "out");
    std::vector<Camera> rig = camera_rig(n, radius, vec3(target, "target"), intrinsics_from(intrinsics));
    for (size_t i = 0; i < rig.size(); ++i) out[i] = new spx_camera{rig[i]};
  });
}

void spx_camera_free(spx_camera* cam) { delete cam; }

spx_status spx_camera_size(const spx_camera* cam, int* width, int* height) {
  return guarded([&] {
    need(cam, "camera");
    if (width) *width = cam->cam.width;
    if (height) *height = cam->cam.height;
  });
}

spx_status spx_camera_project(const spx_camera* cam, const double x[3], double uvd[3], int* visible) {
  return guarded([&] {
    need(cam, "camera");
    need(uvd, "uvd");
    need(visible, "visible");
    const auto p = project(vec3(x, "x"), cam->cam);
    *visible = p.has_value();
    if (p) {
      uvd[0] = p->u;
      uvd[1] = p->v;
      uvd[2] = p->d;
    } else {
      uvd[0] = uvd[1] = uvd[2] = 0.0;
    }
  });
}

spx_status spx_splat(const spx_mesh* mesh, const spx_camera* cam, unsigned threads, spx_image** out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(cam, "camera");
    need(out, "out");
    SplatOptions opts;
    opts.threads = threads_of(threads);
    emit(new spx_image{splat(mesh->mesh.verts, cam->cam, opts)}, out);
  });
}

spx_status spx_normalize_depth(const spx_image* projection, double d_min, double d_max, spx_image** out) {
  return guarded([&] {
    need(projection, "projection");
    need(out, "out");
    const auto* p = std::get_if<ProjectionImage>(&projection->img);
    require(p != nullptr, "depth normalization needs a projection image");
    emit(new spx_image{normalize_depth(*p, d_min, d_max)}, out);
  });
}

spx_status spx_rasterize(const spx_mesh* mesh, const spx_camera* cam, const double background[3], unsigned threads,
                         spx_image** out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(cam, "camera");
    need(out, "out");
    RasterOptions opts;
    opts.threads = threads_of(threads);
    const Eigen::Vector3d bg = background ? vec3(background, "background") : Eigen::Vector3d(1, 1, 1);
    emit(new spx_image{rasterize(mesh->mesh.verts, mesh->mesh.faces, cam->cam, bg, opts)}, out);
  });
}

spx_status spx_image_load(const char* path, spx_image** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    if (extension(path) == ".rgbd")
      emit(new spx_image{load_rgbd(path)}, out);
    else
      emit(new spx_image{load_rgb_image(path)}, out);
  });
}

spx_status spx_image_save(const spx_image* img, const char* path) {
  return guarded([&] {
    need(img, "image");
    need(path, "path");
    if (const auto* p = std::get_if<ProjectionImage>(&img->img)) {
      require(extension(path) == ".rgbd", "projection images are saved as .rgbd");
      save_rgbd(*p, path);
    } else {
      save_rgb_image(std::get<RgbImage>(img->img), path);
    }
  });
}

void spx_image_free(spx_image* img) { delete img; }

spx_status spx_image_get_info(const spx_image* img, spx_image_info* out) {
  return guarded([&] {
    need(img, "image");
    need(out, "out");
    if (const auto* p = std::get_if<ProjectionImage>(&img->img)) {
      *out = {p->width, p->height, 4, p->depth_normalized};
    } else {
      const auto& r = std::get<RgbImage>(img->img);
      *out = {r.width, r.height, 3, 0};
    }
  });
}

const float* spx_image_data(const spx_image* img) {
  if (!img) return nullptr;
  return std::visit([](const auto& i) { return i.data.data(); }, img->img);
}

spx_status spx_psnr(const spx_image* a, const spx_image* b, const uint8_t* mask, double* psnr_db, double* mse) {
  return guarded([&] {
    need(a, "image a");
    need(b, "image b");
    spx_image_info ia{}, ib{};
    spx_image_get_info(a, &ia);
    spx_image_get_info(b, &ib);
    require(ia.width == ib.width && ia.height == ib.height && ia.channels == ib.channels,
            "psnr: image dimensions differ");
    const auto pixels = static_cast<size_t>(ia.width) * static_cast<size_t>(ia.height);
    const auto n = pixels * static_cast<size_t>(ia.channels);
    std::span<const std::uint8_t> m;
    if (mask) m = {mask, pixels};
    const MetricReport r = psnr(std::span<const float>(spx_image_data(a), n),
                                std::span<const float>(spx_image_data(b), n), ia.channels, m);
    if (psnr_db) *psnr_db = r.psnr_db;
    if (mse) *mse = r.mse;
  });
}

spx_status spx_dataset_build(const char* config_json, const char* base_dir, const char* out_dir, unsigned threads,
                             size_t* entry_count) {
  return guarded([&] {
    need(config_json, "config");
    need(out_dir, "out_dir");
    const DatasetConfig cfg = parse_dataset_config(config_json, base_dir ? fs::path(base_dir) : fs::path());
    const DatasetManifest m = build_dataset(cfg, out_dir, threads_of(threads));
    if (entry_count) *entry_count = m.entries.size();
  });
}

}  // extern "C"
