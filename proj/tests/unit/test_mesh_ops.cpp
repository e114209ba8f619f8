#include "support.hpp"

#include "smplpix/error.hpp"
#include "smplpix/image.hpp"
#include "smplpix/mesh_ops.hpp"

#include <doctest.h>

using namespace smplpix;
using namespace testing;

namespace {

double area(const Points& p, const Face& f) {
  const Eigen::Vector3d a = p.row(f[0]).transpose(), b = p.row(f[1]).transpose(), c = p.row(f[2]).transpose();
  return 0.5 * (b - a).cross(c - a).norm();
}

Eigen::Vector3d normal(const Points& p, const Face& f) {
  const Eigen::Vector3d a = p.row(f[0]).transpose(), b = p.row(f[1]).transpose(), c = p.row(f[2]).transpose();
  return (b - a).cross(c - a);
}

}  // namespace

TEST_CASE("tetrahedron subdivides to 10 vertices and 16 faces") {
  const auto [p, f] = tetrahedron();
  const auto s = subdivide_midpoint(with_uniform_color(p, Eigen::Vector3d::Zero()), f);
  CHECK(s.verts.size() == 10);
  CHECK(s.faces.size() == 16);
  CHECK(s.edge_count == 6);
  CHECK(count_unique_edges(s.faces) == 24);
}

TEST_CASE("vertex and face bookkeeping on random closed meshes") {
  Rng rng(50);
  for (int i = 0; i < 100; ++i) {
    const auto [p, f] = random_closed_mesh(rng);
    const std::size_t E = count_unique_edges(f);
    const auto s = subdivide_midpoint(with_uniform_color(p, Eigen::Vector3d::Zero()), f);
    CHECK(static_cast<std::size_t>(s.verts.size()) == static_cast<std::size_t>(p.rows()) + E);
    CHECK(s.faces.size() == 4 * f.size());
    CHECK(s.edge_count == E);
    // Closed stays closed and the Euler characteristic is unchanged.
    const std::size_t E2 = count_unique_edges(s.faces);
    CHECK(2 * E2 == 3 * s.faces.size());
    CHECK(static_cast<long>(s.verts.size()) - static_cast<long>(E2) + static_cast<long>(s.faces.size()) ==
          static_cast<long>(p.rows()) - static_cast<long>(E) + static_cast<long>(f.size()));
  }
}

TEST_CASE("midpoints, attribute averaging and orientation") {
  Rng rng(51);
  const auto [p, f] = uv_sphere(5, 7);
  Points c(p.rows(), 3);
  UvCoords uv(p.rows(), 2);
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    c.row(k) = random_vec(rng, 0, 1).transpose();
    uv.row(k) << rng.uniform(), rng.uniform();
  }
  const auto s = subdivide_midpoint(ColoredVertexSet(p, c), f, uv);
  REQUIRE(s.uv);
  CHECK(s.verts.positions.topRows(p.rows()) == p);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Face& parent = f[k];
    const Face& corner = s.faces[4 * k];
    CHECK(corner[0] == parent[0]);
    const std::uint32_t ab = corner[1];
    CHECK((s.verts.positions.row(ab) - 0.5 * (p.row(parent[0]) + p.row(parent[1]))).norm() < 1e-15);
    CHECK((s.verts.colors.row(ab) - 0.5 * (c.row(parent[0]) + c.row(parent[1]))).norm() < 1e-15);
    CHECK((s.uv->row(ab) - 0.5 * (uv.row(parent[0]) + uv.row(parent[1]))).norm() < 1e-15);
    const Eigen::Vector3d n = normal(p, parent);
    for (int j = 0; j < 4; ++j) {
      CHECK(normal(s.verts.positions, s.faces[4 * k + j]).dot(n) > 0.0);
      CHECK(area(s.verts.positions, s.faces[4 * k + j]) == doctest::Approx(area(p, parent) / 4).epsilon(1e-9));
    }
  }
}

TEST_CASE("planar area is preserved") {
  Points p(5, 3);
  p << 0, 0, 0, 2, 0, 0, 2, 1, 0, 0, 1, 0, 1, 0.5, 0;
  const Faces f{{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  auto total = [](const Points& q, const Faces& g) {
    double a = 0;
    for (const Face& x : g) a += area(q, x);
    return a;
  };
  const auto once = subdivide_midpoint(with_uniform_color(p, Eigen::Vector3d::Zero()), f);
  CHECK(total(once.verts.positions, once.faces) == doctest::Approx(2.0).epsilon(1e-12));
  const auto twice = subdivide_midpoint(once.verts, once.faces);
  CHECK(total(twice.verts.positions, twice.faces) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(twice.faces.size() == 64);
  // Open surfaces follow the same V + E rule.
  CHECK(once.verts.size() == 5 + 8);
  CHECK(static_cast<std::size_t>(twice.verts.size()) == 13 + count_unique_edges(once.faces));
}

TEST_CASE("non-manifold edges and bad faces are rejected") {
  Points p(5, 3);
  p.setRandom();
  const auto v = with_uniform_color(p, Eigen::Vector3d::Zero());
  try {
    subdivide_midpoint(v, {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}});
    FAIL("expected a topology error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Topology);
  }
  CHECK_THROWS_AS(subdivide_midpoint(v, {{0, 1, 7}}), Error);
  CHECK_THROWS_AS(subdivide_midpoint(v, {{0, 1, 1}}), Error);
}

TEST_CASE("bilinear texture lookup") {
  TextureImage tex(4, 2, 0.0f);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) tex.at(x, y)[0] = static_cast<float>(x + 4 * y) / 8.0f;
  // Texel centers return the texel.
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x)
      CHECK(sample_bilinear(tex, (x + 0.5) / 4, (y + 0.5) / 2)[0] == doctest::Approx((x + 4 * y) / 8.0).epsilon(1e-12));
  // Halfway between two texel centers is their mean.
  CHECK(sample_bilinear(tex, 0.25, 0.25)[0] == doctest::Approx(0.5 / 8).epsilon(1e-12));
  CHECK(sample_bilinear(tex, 0.125, 0.5)[0] == doctest::Approx(2.0 / 8).epsilon(1e-12));
  // Borders clamp.
  CHECK(sample_bilinear(tex, 0.0, 0.0)[0] == 0.0);
  CHECK(sample_bilinear(tex, 1.0, 1.0)[0] == doctest::Approx(7.0 / 8).epsilon(1e-12));
  // Bilinear reproduces an affine ramp anywhere inside the texel-center hull.
  Rng rng(52);
  for (int i = 0; i < 100; ++i) {
    const double u = rng.uniform(0.125, 0.875), v = rng.uniform(0.25, 0.75);
    const double x = u * 4 - 0.5, y = v * 2 - 0.5;
    CHECK(sample_bilinear(tex, u, v)[0] == doctest::Approx((x + 4 * y) / 8).epsilon(1e-9));
  }
}

TEST_CASE("vertex colors from per-vertex and per-corner coordinates") {
  const RgbImage tex = load_png(SMPLPIX_FIXTURES "/texture_4x2.png");
  UvCoords uv(3, 2);
  uv << 0.125, 0.25, 0.875, 0.75, 1.5, -0.2;
  const auto s = sample_vertex_colors(tex, uv);
  CHECK(s.clamped == 1);
  CHECK(s.colors.row(0) == Eigen::RowVector3d(1, 0, 0));
  CHECK(s.colors.row(1) == Eigen::RowVector3d(1, 0, 1));
  CHECK(s.colors.row(2) == Eigen::RowVector3d(1, 1, 1));

  UvCoords wedge(5, 2);
  wedge << 0.125, 0.25, 0.375, 0.25, 0.125, 0.75, 0.875, 0.75, 0.625, 0.25;
  const Faces faces{{0, 1, 2}, {1, 3, 2}};
  const Faces wedge_faces{{0, 1, 2}, {4, 3, 2}};
  const auto w = sample_vertex_colors(tex, wedge, wedge_faces, faces, 5);
  CHECK(w.unmapped == 1);
  CHECK(w.colors.row(0) == Eigen::RowVector3d(1, 0, 0));
  CHECK(w.colors.row(1) == Eigen::RowVector3d(0, 0.5, 0.5));
  CHECK(w.colors.row(2) == Eigen::RowVector3d(0, 0, 0));
  CHECK(w.colors.row(3) == Eigen::RowVector3d(1, 0, 1));
}
