#include "smplpix/splat.hpp"

#include "smplpix/error.hpp"
#include "smplpix/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace smplpix {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

// Per-pixel front-most candidate, ordered by (depth, key, index).
struct DepthBuffer {
  std::vector<double> depth;
  std::vector<std::uint32_t> key;
  std::vector<std::uint32_t> index;

  explicit DepthBuffer(std::size_t pixels)
      : depth(pixels, std::numeric_limits<double>::infinity()), key(pixels, kNone), index(pixels, kNone) {}

  bool closer(std::size_t p, double d, std::uint32_t k, std::uint32_t i) const {
    if (d != depth[p]) return d < depth[p];
    if (k != key[p]) return k < key[p];
    return i < index[p];
  }

  void offer(std::size_t p, double d, std::uint32_t k, std::uint32_t i) {
    if (closer(p, d, k, i)) {
      depth[p] = d;
      key[p] = k;
      index[p] = i;
    }
  }
};

void splat_range(const ColoredVertexSet& verts, const Camera& cam,
                 std::span<const std::uint32_t> keys, std::size_t begin, std::size_t end,
                 DepthBuffer& buf) {
  const double w = cam.width;
  const double h = cam.height;
  for (std::size_t i = begin; i < end; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const auto proj = project(verts.positions.row(row).transpose(), cam);
    if (!proj) continue;
    // Written as negated ranges so NaN coordinates are discarded too.
    if (!(proj->u >= 0.0 && proj->u < w && proj->v >= 0.0 && proj->v < h)) continue;
    const auto x = static_cast<std::size_t>(proj->u);
    const auto y = static_cast<std::size_t>(proj->v);
    const std::size_t p = y * static_cast<std::size_t>(cam.width) + x;
    const auto idx = static_cast<std::uint32_t>(i);
    buf.offer(p, proj->d, keys.empty() ? idx : keys[i], idx);
  }
}

}  // namespace

ProjectionImage splat(const ColoredVertexSet& verts, const Camera& cam,
                      const SplatOptions& options) {
  return splat(verts, cam, {}, options);
}

ProjectionImage splat(const ColoredVertexSet& verts, const Camera& cam,
                      std::span<const std::uint32_t> tie_keys, const SplatOptions& options) {
  cam.validate();
  require(verts.positions.rows() == verts.colors.rows(),
          "splat: positions and colors differ in length");
  require(tie_keys.empty() || tie_keys.size() == static_cast<std::size_t>(verts.size()),
          "splat: one tie-break key per vertex required");
  require(static_cast<std::uint64_t>(verts.size()) < kNone, "splat: too many vertices");

  const std::size_t n = static_cast<std::size_t>(verts.size());
  const std::size_t pixels = static_cast<std::size_t>(cam.width) * cam.height;
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(std::max<std::size_t>(1, n / 4096))));

  DepthBuffer merged(pixels);
  if (threads <= 1) {
    splat_range(verts, cam, tie_keys, 0, n, merged);
  } else {
    std::vector<DepthBuffer> partial(threads, DepthBuffer(0));
    parallel_for(threads, threads, [&](std::size_t t) {
      partial[t] = DepthBuffer(pixels);
      splat_range(verts, cam, tie_keys, n * t / threads, n * (t + 1) / threads, partial[t]);
    });
    parallel_chunks(pixels, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p)
        for (const auto& part : partial)
          if (part.index[p] != kNone) merged.offer(p, part.depth[p], part.key[p], part.index[p]);
    });
  }

  ProjectionImage img(cam.width, cam.height);
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::uint32_t i = merged.index[p];
    if (i == kNone) continue;
    float* px = img.data.data() + 4 * p;
    const auto row = static_cast<Eigen::Index>(i);
    px[0] = static_cast<float>(verts.colors(row, 0));
    px[1] = static_cast<float>(verts.colors(row, 1));
    px[2] = static_cast<float>(verts.colors(row, 2));
    px[3] = static_cast<float>(merged.depth[p]);
  }
  return img;
}

ProjectionImage normalize_depth(const ProjectionImage& img, double d_min, double d_max) {
  require(d_min < d_max, "normalize_depth: d_min must be below d_max");
  require(!img.depth_normalized, "normalize_depth: image depth is already normalized");
  ProjectionImage out = img;
  out.depth_normalized = true;
  const float below_one = std::nextafter(1.0f, 0.0f);
  const double range = d_max - d_min;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.is_background(x, y)) continue;
      float* px = out.at(x, y);
      const double t = (static_cast<double>(px[3]) - d_min) / range;
      px[3] = std::clamp(static_cast<float>(t), 0.0f, below_one);
    }
  }
  return out;
}

}  // namespace smplpix
