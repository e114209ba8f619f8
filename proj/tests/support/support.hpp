#pragma once
// Generators and brute-force reference implementations shared by the tests.

#include "smplpix/body_model.hpp"
#include "smplpix/camera.hpp"
#include "smplpix/image.hpp"
#include "smplpix/rng.hpp"
#include "smplpix/types.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

namespace testing {

using namespace smplpix;

inline Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

inline Eigen::Vector3d random_vec(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

inline int random_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

inline Intrinsics random_intrinsics(Rng& rng, int max_w, int max_h) {
  Intrinsics k;
  k.width = random_int(rng, 1, max_w);
  k.height = random_int(rng, 1, max_h);
  k.fx = rng.uniform(0.3, 1.5) * std::max(k.width, k.height);
  k.fy = k.fx * rng.uniform(0.8, 1.25);
  k.cx = k.width * rng.uniform(0.3, 0.7);
  k.cy = k.height * rng.uniform(0.3, 0.7);
  return k;
}

inline Camera random_camera(Rng& rng, int max_w, int max_h) {
  Camera cam(random_intrinsics(rng, max_w, max_h), random_rotation(rng), random_vec(rng, -1.0, 1.0));
  if (rng.uniform() < 0.2) cam.K(0, 1) = rng.uniform(-0.05, 0.05) * cam.K(0, 0);
  if (rng.uniform() < 0.15) {
    cam.R.setIdentity();
    cam.t.setZero();
  }
  return cam;
}

// Points scattered through the frustum of `cam`, some behind it, some outside
// the image, with exact duplicates and exactly equal depths mixed in.
inline ColoredVertexSet random_cloud(Rng& rng, const Camera& cam, int n) {
  Points p(n, 3), c(n, 3);
  const Eigen::Matrix3d kinv = cam.K.inverse();
  const double shared_depth = rng.uniform(0.5, 3.0);
  for (int i = 0; i < n; ++i) {
    const double kind = rng.uniform();
    Eigen::Vector3d xc;
    if (i > 0 && kind < 0.1) {
      p.row(i) = p.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i))));
      c.row(i) = random_vec(rng, 0.0, 1.0).transpose();
      continue;
    }
    const double u = rng.uniform(-0.2, 1.2) * cam.width;
    const double v = rng.uniform(-0.2, 1.2) * cam.height;
    double d = rng.uniform(0.2, 4.0);
    if (kind < 0.2) d = shared_depth;
    else if (kind < 0.25) d = -rng.uniform(0.0, 2.0);
    xc = kinv * Eigen::Vector3d(u, v, 1.0) * d;
    // Depths only stay exactly equal after the round trip for an identity pose.
    p.row(i) = (cam.R.transpose() * (xc - cam.t)).transpose();
    c.row(i) = random_vec(rng, 0.0, 1.0).transpose();
  }
  return ColoredVertexSet(std::move(p), std::move(c));
}

// For every pixel, scan all vertices and keep the one with the smallest
// (depth, index). Projection goes through the 3x4 matrix K [R | t].
inline ProjectionImage oracle_splat(const ColoredVertexSet& verts, const Camera& cam) {
  Eigen::Matrix<double, 3, 4> P;
  P.leftCols<3>() = cam.K * cam.R;
  P.col(3) = cam.K * cam.t;
  const auto n = static_cast<std::size_t>(verts.size());
  std::vector<long long> pixel(n, -1);
  std::vector<double> depth(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d x = verts.positions.row(static_cast<Eigen::Index>(i)).transpose();
    const double z = (cam.R * x + cam.t).z();
    if (z <= kNearPlane) continue;
    const Eigen::Vector3d h = P * x.homogeneous();
    const double u = h.x() / h.z(), v = h.y() / h.z();
    if (!(u >= 0 && v >= 0 && u < cam.width && v < cam.height)) continue;
    pixel[i] = static_cast<long long>(std::floor(v)) * cam.width + static_cast<long long>(std::floor(u));
    depth[i] = z;
  }
  ProjectionImage img(cam.width, cam.height);
  for (long long p = 0; p < static_cast<long long>(img.pixel_count()); ++p) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (pixel[i] != p) continue;
      if (best == n || depth[i] < depth[best]) best = i;
    }
    if (best == n) continue;
    float* px = img.data.data() + 4 * p;
    for (int k = 0; k < 3; ++k) px[k] = static_cast<float>(verts.colors(static_cast<Eigen::Index>(best), k));
    px[3] = static_cast<float>(depth[best]);
  }
  return img;
}

// Ray cast through each pixel center. Returns per-pixel color and a flag that
// is set only where the nearest hit is unambiguous: well inside its triangle
// and clearly in front of every other hit.
struct RayCastImage {
  RgbImage color;
  std::vector<std::uint8_t> hit;
  std::vector<std::uint8_t> robust;
};

inline RayCastImage oracle_raycast(const ColoredVertexSet& verts, const Faces& faces, const Camera& cam,
                                   const Eigen::Vector3d& bg, double margin = 1e-3) {
  RayCastImage out{RgbImage(cam.width, cam.height, 0.0f), {}, {}};
  out.hit.assign(out.color.pixel_count(), 0);
  out.robust.assign(out.color.pixel_count(), 0);
  std::vector<Eigen::Vector3d> xc(static_cast<std::size_t>(verts.size()));
  for (Eigen::Index i = 0; i < verts.size(); ++i)
    xc[static_cast<std::size_t>(i)] = cam.R * verts.positions.row(i).transpose() + cam.t;
  const Eigen::Matrix3d kinv = cam.K.inverse();
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Eigen::Vector3d dir = kinv * Eigen::Vector3d(x + 0.5, y + 0.5, 1.0);
      double best_t = std::numeric_limits<double>::infinity(), second_t = best_t;
      double best_margin = 0.0;
      Eigen::Vector3d best_color = bg;
      for (const Face& f : faces) {
        const Eigen::Vector3d& a = xc[f[0]];
        const Eigen::Vector3d& b = xc[f[1]];
        const Eigen::Vector3d& c = xc[f[2]];
        if (a.z() <= kNearPlane || b.z() <= kNearPlane || c.z() <= kNearPlane) continue;
        // Moller-Trumbore with the ray origin at the camera center.
        const Eigen::Vector3d e1 = b - a, e2 = c - a;
        const Eigen::Vector3d pv = dir.cross(e2);
        const double det = e1.dot(pv);
        if (std::abs(det) < 1e-300) continue;
        const Eigen::Vector3d tv = -a;
        const double u = tv.dot(pv) / det;
        const Eigen::Vector3d qv = tv.cross(e1);
        const double v = dir.dot(qv) / det;
        const double t = e2.dot(qv) / det;
        const double w = 1.0 - u - v;
        if (u < -margin || v < -margin || w < -margin || t <= 0.0) continue;
        const double m = std::min({u, v, w});
        if (t < best_t) {
          second_t = best_t;
          best_t = t;
          best_margin = m;
          best_color = w * verts.colors.row(f[0]).transpose() + u * verts.colors.row(f[1]).transpose() +
                       v * verts.colors.row(f[2]).transpose();
        } else if (t < second_t) {
          second_t = t;
        }
      }
      const std::size_t p = static_cast<std::size_t>(y) * cam.width + x;
      float* px = out.color.at(x, y);
      for (int k = 0; k < 3; ++k) px[k] = static_cast<float>(best_color[k]);
      if (std::isfinite(best_t)) {
        out.hit[p] = best_margin >= 0.0;
        out.robust[p] = best_margin > margin && second_t > best_t * (1.0 + 1e-6) + 1e-9;
      } else {
        out.robust[p] = 1;
      }
    }
  }
  return out;
}

// Closed meshes: latitude/longitude spheres with poles and tori, optionally
// with shuffled vertex numbering and rotated faces.
inline std::pair<Points, Faces> uv_sphere(int rings, int segments, double radius = 1.0) {
  Points p((rings - 1) * segments + 2, 3);
  p.row(0) << 0, radius, 0;
  for (int r = 1; r < rings; ++r) {
    const double phi = M_PI * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double th = 2 * M_PI * s / segments;
      p.row(1 + (r - 1) * segments + s) << radius * std::sin(phi) * std::cos(th), radius * std::cos(phi),
          radius * std::sin(phi) * std::sin(th);
    }
  }
  const auto south = static_cast<std::uint32_t>(p.rows() - 1);
  p.row(south) << 0, -radius, 0;
  Faces f;
  auto ring = [&](int r, int s) { return static_cast<std::uint32_t>(1 + (r - 1) * segments + (s % segments)); };
  for (int s = 0; s < segments; ++s) f.push_back({0, ring(1, s + 1), ring(1, s)});
  for (int r = 1; r < rings - 1; ++r) {
    for (int s = 0; s < segments; ++s) {
      f.push_back({ring(r, s), ring(r, s + 1), ring(r + 1, s)});
      f.push_back({ring(r, s + 1), ring(r + 1, s + 1), ring(r + 1, s)});
    }
  }
  for (int s = 0; s < segments; ++s) f.push_back({south, ring(rings - 1, s), ring(rings - 1, s + 1)});
  return {p, f};
}

inline std::pair<Points, Faces> torus(int n, int m, double big = 1.0, double small = 0.3) {
  Points p(n * m, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double a = 2 * M_PI * i / n, b = 2 * M_PI * j / m;
      p.row(i * m + j) << (big + small * std::cos(b)) * std::cos(a), small * std::sin(b),
          (big + small * std::cos(b)) * std::sin(a);
    }
  Faces f;
  auto id = [&](int i, int j) { return static_cast<std::uint32_t>((i % n) * m + (j % m)); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      f.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
      f.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return {p, f};
}

inline std::pair<Points, Faces> tetrahedron() {
  Points p(4, 3);
  p << 1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, 1;
  Faces f{{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return {p, f};
}

inline std::pair<Points, Faces> random_closed_mesh(Rng& rng) {
  auto mesh = rng.uniform() < 0.5 ? uv_sphere(random_int(rng, 2, 12), random_int(rng, 3, 16))
                                  : torus(random_int(rng, 3, 14), random_int(rng, 3, 10));
  auto& [p, f] = mesh;
  std::vector<std::uint32_t> perm(static_cast<std::size_t>(p.rows()));
  std::iota(perm.begin(), perm.end(), 0u);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  Points q(p.rows(), 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i) q.row(perm[static_cast<std::size_t>(i)]) = p.row(i);
  for (Face& face : f) {
    for (auto& v : face) v = perm[v];
    std::rotate(face.begin(), face.begin() + rng.below(3), face.end());
  }
  for (std::size_t i = f.size(); i > 1; --i) std::swap(f[i - 1], f[rng.below(i)]);
  p = q;
  return mesh;
}

inline std::size_t count_unique_edges(const Faces& faces) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const Face& f : faces)
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t a = f[static_cast<std::size_t>(k)], b = f[static_cast<std::size_t>((k + 1) % 3)];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  return edges.size();
}

// Random skinned model: a random kinematic tree, template vertices around the
// joints, sparse convex skinning weights and regressor rows, dense random
// shape and pose bases.
inline BodyModel random_model(Rng& rng, int n = 60, int joints = 6, int shape_dims = 4) {
  BodyModel m;
  m.parents.assign(static_cast<std::size_t>(joints), kRootParent);
  for (int j = 1; j < joints; ++j) m.parents[static_cast<std::size_t>(j)] = random_int(rng, 0, j - 1);
  Points joint_pos(joints, 3);
  joint_pos.row(0) = random_vec(rng, -0.1, 0.1).transpose();
  for (int j = 1; j < joints; ++j)
    joint_pos.row(j) = joint_pos.row(m.parents[static_cast<std::size_t>(j)]) + random_vec(rng, -0.3, 0.3).transpose();

  m.template_vertices.resize(n, 3);
  m.skin_weights = Eigen::MatrixXd::Zero(n, joints);
  for (int v = 0; v < n; ++v) {
    const int j = v % joints;
    m.template_vertices.row(v) = joint_pos.row(j) + random_vec(rng, -0.1, 0.1).transpose();
    const int other = random_int(rng, 0, joints - 1);
    const double w = rng.uniform(0.55, 1.0);
    m.skin_weights(v, j) += w;
    m.skin_weights(v, other) += 1.0 - w;
  }
  m.joint_regressor = Eigen::MatrixXd::Zero(joints, n);
  for (int j = 0; j < joints; ++j) {
    double total = 0.0;
    for (int v = j; v < n; v += joints) {
      const double w = rng.uniform(0.1, 1.0);
      m.joint_regressor(j, v) = w;
      total += w;
    }
    m.joint_regressor.row(j) /= total;
  }
  m.shape_basis.resize(3 * n, shape_dims);
  for (Eigen::Index i = 0; i < m.shape_basis.size(); ++i) m.shape_basis.data()[i] = rng.normal(0.0, 0.01);
  m.pose_basis.resize(3 * n, 9 * (joints - 1));
  for (Eigen::Index i = 0; i < m.pose_basis.size(); ++i) m.pose_basis.data()[i] = rng.normal(0.0, 0.002);
  for (int v = 0; v + 2 < n; v += 3)
    m.faces.push_back({static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v + 1), static_cast<std::uint32_t>(v + 2)});
  m.validate();
  return m;
}

inline PoseParams random_pose(Rng& rng, const BodyModel& m, double sigma = 0.6) {
  PoseParams p = PoseParams::zeros(m);
  for (Eigen::Index i = 0; i < p.theta.size(); ++i) p.theta[i] = rng.normal(0.0, sigma);
  return p;
}

inline ShapeParams random_shape(Rng& rng, const BodyModel& m, double sigma = 1.0) {
  ShapeParams s = ShapeParams::zeros(m);
  for (Eigen::Index i = 0; i < s.beta.size(); ++i) s.beta[i] = rng.normal(0.0, sigma);
  return s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("smplpix_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Relative path -> file bytes for every regular file under `root`.
inline std::map<std::string, std::vector<std::uint8_t>> read_tree(const std::filesystem::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[std::filesystem::relative(e.path(), root).generic_string()] =
        std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

}  // namespace testing
