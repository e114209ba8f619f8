#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

namespace smplpix {

// N x 3 row-major point array; row i is vertex i.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
// N x 2 texture coordinates in [0,1]^2.
using UvCoords = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Face = std::array<std::uint32_t, 3>;
using Faces = std::vector<Face>;

// Positions in meters and colors in [0,1], one row per vertex.
struct ColoredVertexSet {
  Points positions;
  Points colors;

  ColoredVertexSet() = default;
  ColoredVertexSet(Points p, Points c);

  Eigen::Index size() const { return positions.rows(); }

  // Throws on row-count mismatch or non-finite positions; clamps colors to [0,1].
  void validate_and_clamp();
};

// Points with all colors set to `rgb`.
ColoredVertexSet with_uniform_color(const Points& positions, const Eigen::Vector3d& rgb);

}  // namespace smplpix
