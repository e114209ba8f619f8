#include "smplpix/mesh_ops.hpp"

#include "smplpix/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace smplpix {

SubdividedMesh subdivide_midpoint(const ColoredVertexSet& verts, const Faces& faces,
                                  const std::optional<UvCoords>& uv) {
  const Eigen::Index V = verts.size();
  require(verts.colors.rows() == V, "subdivide: positions and colors differ in length");
  if (uv) require(uv->rows() == V, "subdivide: uv must have one row per vertex");
  for (const Face& f : faces) {
    for (std::uint32_t i : f) require(static_cast<Eigen::Index>(i) < V, "subdivide: face index out of range");
    require(f[0] != f[1] && f[1] != f[2] && f[0] != f[2], "subdivide: degenerate face");
  }

  struct EdgeInfo {
    std::uint32_t midpoint;
    int faces;
  };
  std::unordered_map<std::uint64_t, EdgeInfo> edges;
  edges.reserve(faces.size() * 2);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> endpoints;
  endpoints.reserve(faces.size() * 3 / 2 + 1);

  auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
    const std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
    auto [it, inserted] =
        edges.try_emplace(key, EdgeInfo{static_cast<std::uint32_t>(V + static_cast<Eigen::Index>(endpoints.size())), 0});
    if (inserted) endpoints.emplace_back(a, b);
    if (++it->second.faces > 2)
      fail(ErrorCode::Topology, "subdivide: edge (" + std::to_string(std::min(a, b)) + ", " +
                                    std::to_string(std::max(a, b)) + ") is shared by more than two faces");
    return it->second.midpoint;
  };

  SubdividedMesh out;
  out.faces.reserve(faces.size() * 4);
  for (const Face& f : faces) {
    const std::uint32_t ab = midpoint(f[0], f[1]);
    const std::uint32_t bc = midpoint(f[1], f[2]);
    const std::uint32_t ca = midpoint(f[2], f[0]);
    out.faces.push_back({f[0], ab, ca});
    out.faces.push_back({ab, f[1], bc});
    out.faces.push_back({ca, bc, f[2]});
    out.faces.push_back({ab, bc, ca});
  }

  const auto E = static_cast<Eigen::Index>(endpoints.size());
  out.edge_count = endpoints.size();
  out.verts.positions.resize(V + E, 3);
  out.verts.colors.resize(V + E, 3);
  out.verts.positions.topRows(V) = verts.positions;
  out.verts.colors.topRows(V) = verts.colors;
  if (uv) {
    out.uv = UvCoords(V + E, 2);
    out.uv->topRows(V) = *uv;
  }
  for (Eigen::Index e = 0; e < E; ++e) {
    const auto [a, b] = endpoints[static_cast<std::size_t>(e)];
    out.verts.positions.row(V + e) = 0.5 * (verts.positions.row(a) + verts.positions.row(b));
    out.verts.colors.row(V + e) = 0.5 * (verts.colors.row(a) + verts.colors.row(b));
    if (uv) out.uv->row(V + e) = 0.5 * (uv->row(a) + uv->row(b));
  }
  return out;
}

Eigen::Vector3d sample_bilinear(const TextureImage& tex, double u, double v) {
  require(tex.width > 0 && tex.height > 0, "texture is empty");
  const double x = std::clamp(u * tex.width - 0.5, 0.0, static_cast<double>(tex.width - 1));
  const double y = std::clamp(v * tex.height - 0.5, 0.0, static_cast<double>(tex.height - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, tex.width - 1);
  const int y1 = std::min(y0 + 1, tex.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  Eigen::Vector3d out;
  for (int c = 0; c < 3; ++c) {
    const double top = (1.0 - fx) * tex.at(x0, y0)[c] + fx * tex.at(x1, y0)[c];
    const double bottom = (1.0 - fx) * tex.at(x0, y1)[c] + fx * tex.at(x1, y1)[c];
    out[c] = std::clamp((1.0 - fy) * top + fy * bottom, 0.0, 1.0);
  }
  return out;
}

namespace {

bool clamp_uv(double& u, double& v) {
  const bool outside = !(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0);
  u = std::isfinite(u) ? std::clamp(u, 0.0, 1.0) : 0.0;
  v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
  return outside;
}

}  // namespace

ColorSamples sample_vertex_colors(const TextureImage& tex, const UvCoords& uv) {
  ColorSamples out;
  out.colors.resize(uv.rows(), 3);
  for (Eigen::Index i = 0; i < uv.rows(); ++i) {
    double u = uv(i, 0);
    double v = uv(i, 1);
    if (clamp_uv(u, v)) ++out.clamped;
    out.colors.row(i) = sample_bilinear(tex, u, v).transpose();
  }
  return out;
}

ColorSamples sample_vertex_colors(const TextureImage& tex, const UvCoords& wedge_uv,
                                  const Faces& wedge_faces, const Faces& faces,
                                  Eigen::Index vertex_count) {
  require(wedge_faces.size() == faces.size(), "sample colors: one uv face per face required");
  std::vector<std::vector<std::uint32_t>> wedges(static_cast<std::size_t>(vertex_count));
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t v = faces[f][k];
      const std::uint32_t t = wedge_faces[f][k];
      require(static_cast<Eigen::Index>(v) < vertex_count, "sample colors: face index out of range");
      require(static_cast<Eigen::Index>(t) < wedge_uv.rows(), "sample colors: uv index out of range");
      auto& list = wedges[v];
      if (std::find(list.begin(), list.end(), t) == list.end()) list.push_back(t);
    }
  }
  ColorSamples out;
  out.colors = Points::Zero(vertex_count, 3);
  std::vector<char> clamped(static_cast<std::size_t>(wedge_uv.rows()), 0);
  std::vector<Eigen::Vector3d> cache(static_cast<std::size_t>(wedge_uv.rows()));
  std::vector<char> cached(static_cast<std::size_t>(wedge_uv.rows()), 0);
  for (Eigen::Index v = 0; v < vertex_count; ++v) {
    const auto& list = wedges[static_cast<std::size_t>(v)];
    if (list.empty()) {
      ++out.unmapped;
      continue;
    }
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::uint32_t t : list) {
      if (!cached[t]) {
        double u = wedge_uv(t, 0);
        double w = wedge_uv(t, 1);
        clamped[t] = clamp_uv(u, w);
        cache[t] = sample_bilinear(tex, u, w);
        cached[t] = 1;
      }
      sum += cache[t];
    }
    out.colors.row(v) = (sum / static_cast<double>(list.size())).transpose();
  }
  out.clamped = static_cast<std::size_t>(std::count(clamped.begin(), clamped.end(), 1));
  return out;
}

}  // namespace smplpix
