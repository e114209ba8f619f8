#pragma once

#include "smplpix/camera.hpp"
#include "smplpix/image.hpp"
#include "smplpix/types.hpp"

#include <cstdint>
#include <span>

namespace smplpix {

struct SplatOptions {
  unsigned threads = 1;
};

// Drops every vertex onto the pixel (floor(u), floor(v)) it projects into and
// keeps the front-most one per pixel. Equal depths resolve to the smallest
// tie-break key, which defaults to the vertex index. Points behind the camera
// or outside the image are discarded. Depth is stored as metric camera z.
ProjectionImage splat(const ColoredVertexSet& verts, const Camera& cam,
                      const SplatOptions& options = {});

// Same, with caller-supplied tie-break keys (one per vertex).
ProjectionImage splat(const ColoredVertexSet& verts, const Camera& cam,
                      std::span<const std::uint32_t> tie_keys, const SplatOptions& options = {});

// Maps non-background depth d to (d - d_min) / (d_max - d_min), clamped to
// [0, 1). Background pixels keep their value of exactly 1.
ProjectionImage normalize_depth(const ProjectionImage& img, double d_min, double d_max);

}  // namespace smplpix
