#include "smplpix/raster.hpp"

#include "smplpix/error.hpp"
#include "smplpix/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smplpix {

namespace {

struct ScreenVertex {
  double x;
  double y;
  double inv_depth;
  bool valid;
};

// Edge function evaluated with the endpoints in vertex-index order, so a shared
// edge yields bitwise-opposite values in its two triangles.
struct Edge {
  const ScreenVertex* a;
  const ScreenVertex* b;
  double sign;   // +1 when a->b is the triangle's winding direction
  bool owns_boundary;

  double eval(double px, double py) const {
    return sign * ((b->x - a->x) * (py - a->y) - (b->y - a->y) * (px - a->x));
  }
  bool inside(double px, double py) const {
    const double e = eval(px, py);
    return e > 0.0 || (e == 0.0 && owns_boundary);
  }
};

Edge make_edge(const std::vector<ScreenVertex>& sv, std::uint32_t i, std::uint32_t j, double winding) {
  Edge e;
  const bool swap = j < i;
  e.a = &sv[swap ? j : i];
  e.b = &sv[swap ? i : j];
  e.sign = (swap ? -1.0 : 1.0) * winding;
  // Direction of the edge as traversed by the (positively oriented) triangle.
  const ScreenVertex& from = sv[i];
  const ScreenVertex& to = sv[j];
  double dx = to.x - from.x;
  double dy = to.y - from.y;
  if (winding < 0) {
    dx = -dx;
    dy = -dy;
  }
  e.owns_boundary = dy > 0.0 || (dy == 0.0 && dx < 0.0);
  return e;
}

}  // namespace

RasterImage rasterize(const ColoredVertexSet& verts, const Faces& faces, const Camera& cam,
                      const Eigen::Vector3d& background, const RasterOptions& options) {
  cam.validate();
  require(verts.positions.rows() == verts.colors.rows(),
          "rasterize: positions and colors differ in length");
  const auto n = static_cast<std::size_t>(verts.size());
  for (const Face& f : faces)
    for (std::uint32_t i : f) require(i < n, "rasterize: face index out of range");

  std::vector<ScreenVertex> sv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = project(verts.positions.row(static_cast<Eigen::Index>(i)).transpose(), cam);
    sv[i] = p ? ScreenVertex{p->u, p->v, 1.0 / p->d, true} : ScreenVertex{0, 0, 0, false};
  }

  const int W = cam.width;
  const int H = cam.height;
  RasterImage img(W, H, 0.0f);
  for (std::size_t p = 0; p < img.pixel_count(); ++p)
    for (int c = 0; c < 3; ++c) img.data[3 * p + c] = static_cast<float>(std::clamp(background[c], 0.0, 1.0));
  std::vector<double> zbuf(img.pixel_count(), std::numeric_limits<double>::infinity());
  if (options.coverage) options.coverage->assign(img.pixel_count(), 0);

  auto draw_rows = [&](std::size_t row_begin, std::size_t row_end) {
    for (const Face& f : faces) {
      const ScreenVertex& v0 = sv[f[0]];
      const ScreenVertex& v1 = sv[f[1]];
      const ScreenVertex& v2 = sv[f[2]];
      if (!v0.valid || !v1.valid || !v2.valid) continue;
      const double area = (v1.x - v0.x) * (v2.y - v0.y) - (v1.y - v0.y) * (v2.x - v0.x);
      if (!(std::abs(area) > 0.0) || !std::isfinite(area)) continue;
      const double winding = area > 0.0 ? 1.0 : -1.0;
      // Edge k is opposite vertex k.
      const Edge e0 = make_edge(sv, f[1], f[2], winding);
      const Edge e1 = make_edge(sv, f[2], f[0], winding);
      const Edge e2 = make_edge(sv, f[0], f[1], winding);

      const double min_x = std::min({v0.x, v1.x, v2.x});
      const double max_x = std::max({v0.x, v1.x, v2.x});
      const double min_y = std::min({v0.y, v1.y, v2.y});
      const double max_y = std::max({v0.y, v1.y, v2.y});
      auto clamp_index = [](double v, double lo, double hi) {
        return static_cast<int>(std::clamp(v, lo, hi));
      };
      const double wmax = W;
      const double hlo = static_cast<double>(row_begin);
      const double hhi = static_cast<double>(row_end);
      const int x0 = clamp_index(std::ceil(min_x - 0.5), 0.0, wmax);
      const int x1 = clamp_index(std::floor(max_x - 0.5), -1.0, wmax - 1.0);
      const int y0 = clamp_index(std::ceil(min_y - 0.5), hlo, hhi);
      const int y1 = clamp_index(std::floor(max_y - 0.5), hlo - 1.0, hhi - 1.0);
      if (x0 > x1 || y0 > y1) continue;

      const double abs_area = std::abs(area);
      for (int y = y0; y <= y1; ++y) {
        const double py = y + 0.5;
        for (int x = x0; x <= x1; ++x) {
          const double px = x + 0.5;
          if (!e0.inside(px, py) || !e1.inside(px, py) || !e2.inside(px, py)) continue;
          const double l0 = e0.eval(px, py) / abs_area;
          const double l1 = e1.eval(px, py) / abs_area;
          const double l2 = e2.eval(px, py) / abs_area;
          const double w0 = l0 * v0.inv_depth;
          const double w1 = l1 * v1.inv_depth;
          const double w2 = l2 * v2.inv_depth;
          const double inv_depth = w0 + w1 + w2;
          const double depth = 1.0 / inv_depth;
          const std::size_t p = static_cast<std::size_t>(y) * W + x;
          if (!(depth < zbuf[p])) continue;
          zbuf[p] = depth;
          float* out = img.data.data() + 3 * p;
          for (int c = 0; c < 3; ++c) {
            const double value = (w0 * verts.colors(f[0], c) + w1 * verts.colors(f[1], c) +
                                  w2 * verts.colors(f[2], c)) * depth;
            out[c] = static_cast<float>(std::clamp(value, 0.0, 1.0));
          }
          if (options.coverage) (*options.coverage)[p] = 1;
        }
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(H)));
  parallel_chunks(static_cast<std::size_t>(H), threads, draw_rows);
  return img;
}

}  // namespace smplpix
