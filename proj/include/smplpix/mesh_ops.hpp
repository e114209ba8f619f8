#pragma once

#include "smplpix/image.hpp"
#include "smplpix/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

namespace smplpix {

struct Mesh {
  ColoredVertexSet verts;
  Faces faces;
  std::optional<UvCoords> uv;  // one texture coordinate per vertex
  bool has_colors = false;

  // Per-corner texture coordinates as loaded from OBJ, kept when a vertex is
  // referenced with more than one texture coordinate (uv seams).
  UvCoords wedge_uv;
  Faces wedge_faces;
};

struct SubdividedMesh {
  ColoredVertexSet verts;
  Faces faces;
  std::optional<UvCoords> uv;
  std::size_t edge_count = 0;
};

// Splits every edge at its midpoint and every triangle into four. Midpoint
// attributes (position, color, uv) are endpoint averages; new vertices are
// numbered after the originals in order of first appearance while scanning
// faces. Throws Error(Topology) for an edge shared by more than two faces.
SubdividedMesh subdivide_midpoint(const ColoredVertexSet& verts, const Faces& faces,
                                  const std::optional<UvCoords>& uv = std::nullopt);

struct ColorSamples {
  Points colors;
  std::size_t clamped = 0;   // uv coordinates outside [0,1]^2
  std::size_t unmapped = 0;  // vertices without any texture coordinate
};

// Bilinear lookup with texel centers at ((i + 0.5) / W, (j + 0.5) / H); v grows
// with the image row. Coordinates are clamped to the texture border.
Eigen::Vector3d sample_bilinear(const TextureImage& tex, double u, double v);

ColorSamples sample_vertex_colors(const TextureImage& tex, const UvCoords& uv);

// One color per vertex from per-corner coordinates: the average of the samples
// at each distinct coordinate the vertex is referenced with.
ColorSamples sample_vertex_colors(const TextureImage& tex, const UvCoords& wedge_uv,
                                  const Faces& wedge_faces, const Faces& faces,
                                  Eigen::Index vertex_count);

// OBJ ("v x y z [r g b]", "vt", "f") or PLY (ascii / binary little-endian),
// chosen by extension. Polygons are fan-triangulated.
Mesh load_mesh(const std::filesystem::path& path);
Mesh parse_obj(const std::string& text, const std::string& name = "obj");
Mesh parse_ply(const std::vector<std::uint8_t>& bytes, const std::string& name = "ply");

// OBJ keeps colors as the vertex extension; PLY is binary little-endian with
// float colors unless `ply_uchar_colors` is set.
void save_mesh(const Mesh& mesh, const std::filesystem::path& path, bool ply_uchar_colors = false);
std::string format_obj(const Mesh& mesh);
std::vector<std::uint8_t> format_ply(const Mesh& mesh, bool uchar_colors = false);

}  // namespace smplpix
