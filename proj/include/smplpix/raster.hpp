#pragma once

#include "smplpix/camera.hpp"
#include "smplpix/image.hpp"
#include "smplpix/types.hpp"

#include <cstdint>
#include <vector>

namespace smplpix {

struct RasterOptions {
  unsigned threads = 1;
  // When set, receives one byte per pixel: 1 where some triangle was drawn.
  std::vector<std::uint8_t>* coverage = nullptr;
};

// Z-buffered triangle rasterizer with perspective-correct per-vertex color
// interpolation. Pixel centers sit at (x + 0.5, y + 0.5); pixels on a shared
// edge belong to exactly one triangle (top-left rule). Triangles with a vertex
// at or behind the near plane, and zero-area triangles, are skipped.
RasterImage rasterize(const ColoredVertexSet& verts, const Faces& faces, const Camera& cam,
                      const Eigen::Vector3d& background, const RasterOptions& options = {});

}  // namespace smplpix
