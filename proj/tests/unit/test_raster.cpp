#include "support.hpp"

#include "smplpix/error.hpp"
#include "smplpix/raster.hpp"

#include <doctest.h>

using namespace smplpix;
using namespace testing;

namespace {

Camera front_camera(int w, int h, double f) {
  Intrinsics k;
  k.fx = k.fy = f;
  k.cx = 0.5 * w;
  k.cy = 0.5 * h;
  k.width = w;
  k.height = h;
  return Camera(k, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
}

// Per-pixel count of triangles that claim it, rasterizing faces one at a time.
std::vector<int> claim_counts(const ColoredVertexSet& v, const Faces& faces, const Camera& cam) {
  std::vector<int> count(static_cast<std::size_t>(cam.width) * cam.height, 0);
  std::vector<std::uint8_t> cov;
  for (const Face& f : faces) {
    RasterOptions o;
    o.coverage = &cov;
    rasterize(v, {f}, cam, Eigen::Vector3d::Ones(), o);
    for (std::size_t p = 0; p < cov.size(); ++p) count[p] += cov[p];
  }
  return count;
}

}  // namespace

TEST_CASE("interior colors match a ray-cast oracle") {
  Rng rng(40);
  for (int i = 0; i < 40; ++i) {
    const Camera cam = random_camera(rng, 40, 40);
    const int nf = random_int(rng, 1, 12);
    Points p(3 * nf, 3), c(3 * nf, 3);
    const Eigen::Matrix3d kinv = cam.K.inverse();
    for (int k = 0; k < 3 * nf; ++k) {
      const Eigen::Vector3d xc = kinv * Eigen::Vector3d(rng.uniform(-0.3, 1.3) * cam.width, rng.uniform(-0.3, 1.3) * cam.height, 1.0) *
                                 rng.uniform(0.5, 3.0);
      p.row(k) = (cam.R.transpose() * (xc - cam.t)).transpose();
      c.row(k) = random_vec(rng, 0, 1).transpose();
    }
    Faces faces;
    for (int k = 0; k < nf; ++k)
      faces.push_back({static_cast<std::uint32_t>(3 * k), static_cast<std::uint32_t>(3 * k + 1), static_cast<std::uint32_t>(3 * k + 2)});
    const ColoredVertexSet v(p, c);
    const Eigen::Vector3d bg(0.1, 0.2, 0.3);
    std::vector<std::uint8_t> cov;
    RasterOptions o;
    o.coverage = &cov;
    const RasterImage img = rasterize(v, faces, cam, bg, o);
    const RayCastImage ref = oracle_raycast(v, faces, cam, bg);
    int compared = 0;
    for (std::size_t px = 0; px < cov.size(); ++px) {
      if (!ref.robust[px]) continue;
      ++compared;
      CHECK(cov[px] == ref.hit[px]);
      for (int ch = 0; ch < 3; ++ch) CHECK(std::abs(img.data[3 * px + ch] - ref.color.data[3 * px + ch]) < 1e-5f);
    }
    CHECK(compared > 0);
  }
}

TEST_CASE("shared edges are drawn exactly once") {
  // A grid of quads whose corners sit exactly on pixel centers and edges.
  const Camera cam = front_camera(24, 18, 10.0);
  for (int step : {1, 2, 3}) {
    std::vector<Eigen::Vector3d> pts;
    const int nx = 24 / step + 1, ny = 18 / step + 1;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double u = i * step + (step == 2 ? 0.5 : 0.0), v = j * step + (step == 3 ? 0.5 : 0.0);
        pts.emplace_back((u - 12) / 10.0, (v - 9) / 10.0, 1.0);
      }
    Points p(static_cast<Eigen::Index>(pts.size()), 3);
    for (std::size_t k = 0; k < pts.size(); ++k) p.row(static_cast<Eigen::Index>(k)) = pts[k].transpose();
    Faces faces;
    auto id = [&](int i, int j) { return static_cast<std::uint32_t>(j * nx + i); };
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        if ((i + j) % 2) {
          faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
          faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        } else {
          faces.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j)});  // opposite winding
          faces.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1)});
        }
      }
    const ColoredVertexSet v = with_uniform_color(p, Eigen::Vector3d(0.5, 0.5, 0.5));
    const auto count = claim_counts(v, faces, cam);
    const double u_lo = step == 2 ? 0.5 : 0.0, v_lo = step == 3 ? 0.5 : 0.0;
    const double u_hi = u_lo + (nx - 1) * step, v_hi = v_lo + (ny - 1) * step;
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        const double cx = x + 0.5, cy = y + 0.5;
        if (cx > u_lo && cx < u_hi && cy > v_lo && cy < v_hi) CHECK(count[static_cast<std::size_t>(y) * cam.width + x] == 1);
        else CHECK(count[static_cast<std::size_t>(y) * cam.width + x] <= 1);
      }
  }
}

TEST_CASE("closed surfaces are watertight") {
  Rng rng(41);
  for (int i = 0; i < 8; ++i) {
    auto [p, f] = uv_sphere(random_int(rng, 4, 10), random_int(rng, 5, 14), 0.5);
    const Eigen::Matrix3d r = random_rotation(rng);
    for (Eigen::Index k = 0; k < p.rows(); ++k) p.row(k) = (r * p.row(k).transpose()).transpose() + Eigen::RowVector3d(0, 0, 2.0);
    const Camera cam = front_camera(48, 40, 60.0);
    const auto count = claim_counts(with_uniform_color(p, Eigen::Vector3d::Ones()), f, cam);
    for (std::size_t k = 0; k < count.size(); ++k) CHECK(count[k] % 2 == 0);
    // The center of the sphere is covered by front and back.
    CHECK(count[static_cast<std::size_t>(20) * 48 + 24] == 2);
  }
}

TEST_CASE("a vertex-colored triangle reproduces each vertex color near that vertex") {
  const Camera cam = front_camera(200, 200, 200.0);
  Points p(3, 3), c(3, 3);
  p << -0.5, -0.5, 1.0, 0.5, -0.5, 1.5, 0.0, 0.5, 2.0;
  c << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  const RasterImage img = rasterize(ColoredVertexSet(p, c), {{0, 1, 2}}, cam, Eigen::Vector3d::Zero());
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d centroid = (p.row(0) + p.row(1) + p.row(2)).transpose() / 3.0;
    const Eigen::Vector3d near = p.row(k).transpose() + 0.03 * (centroid - p.row(k).transpose());
    const auto q = project(near, cam);
    REQUIRE(q);
    const float* px = img.at(static_cast<int>(q->u), static_cast<int>(q->v));
    CHECK(px[k] > 0.9f);
  }
}

TEST_CASE("perspective-correct interpolation differs from screen-space interpolation") {
  // A strip receding in depth: the screen midpoint is not the 3D midpoint.
  const Camera cam = front_camera(100, 10, 50.0);
  Points p(4, 3), c(4, 3);
  p << -1, -0.1, 1, 1, -0.1, 4, 1, 0.1, 4, -1, 0.1, 1;
  c << 0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0, 0;
  const RasterImage img = rasterize(ColoredVertexSet(p, c), {{0, 1, 2}, {0, 2, 3}}, cam, Eigen::Vector3d::Zero());
  for (int x = 40; x < 100; x += 7) {
    const float got = img.at(x, 5)[0];
    // Ray through the pixel center meets the strip at parameter s along x.
    const double u = (x + 0.5 - 50.0) / 50.0;
    const double s = (u + 1.0) / (2.0 - 3.0 * u);  // from x = u * z with x = -1 + 2s, z = 1 + 3s
    if (s <= 0.0 || s >= 1.0) continue;
    CHECK(got == doctest::Approx(s).epsilon(1e-5));
  }
}

TEST_CASE("nearer triangle occludes, and the first drawn wins exact ties") {
  const Camera cam = front_camera(20, 20, 20.0);
  Points p(6, 3), c(6, 3);
  p << -1, -1, 2, 1, -1, 2, 0, 1, 2, -1, -1, 1, 1, -1, 1, 0, 1, 1;
  c << 1, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0;
  const ColoredVertexSet v(p, c);
  CHECK(rasterize(v, {{0, 1, 2}, {3, 4, 5}}, cam, Eigen::Vector3d::Zero()).at(10, 10)[1] == 1.0f);
  CHECK(rasterize(v, {{3, 4, 5}, {0, 1, 2}}, cam, Eigen::Vector3d::Zero()).at(10, 10)[1] == 1.0f);
  Points q = p;
  q.bottomRows(3).col(2).setConstant(2.0);
  const ColoredVertexSet tie(q, c);
  CHECK(rasterize(tie, {{0, 1, 2}, {3, 4, 5}}, cam, Eigen::Vector3d::Zero()).at(10, 10)[0] == 1.0f);
  CHECK(rasterize(tie, {{3, 4, 5}, {0, 1, 2}}, cam, Eigen::Vector3d::Zero()).at(10, 10)[1] == 1.0f);
}

TEST_CASE("degenerate and behind-camera triangles are skipped") {
  const Camera cam = front_camera(10, 10, 10.0);
  Points p(6, 3), c = Points::Zero(6, 3);
  p << -1, -1, 1, 1, 1, 1, 2, 2, 1,  // collinear
      -1, -1, 1, 1, -1, 1, 0, 1, -1;  // one vertex behind
  std::vector<std::uint8_t> cov;
  RasterOptions o;
  o.coverage = &cov;
  const RasterImage img = rasterize(ColoredVertexSet(p, c), {{0, 1, 2}, {3, 4, 5}}, cam, Eigen::Vector3d(0.25, 0.5, 1.0), o);
  CHECK(std::count(cov.begin(), cov.end(), 1) == 0);
  CHECK(img.at(3, 3)[0] == 0.25f);
  CHECK(img.at(3, 3)[2] == 1.0f);
  CHECK_THROWS_AS(rasterize(ColoredVertexSet(p, c), {{0, 1, 6}}, cam, Eigen::Vector3d::Zero()), Error);
}

TEST_CASE("thread count does not change the image") {
  Rng rng(42);
  auto [p, f] = uv_sphere(12, 20, 0.4);
  Points c(p.rows(), 3);
  for (Eigen::Index k = 0; k < c.rows(); ++k) c.row(k) = random_vec(rng, 0, 1).transpose();
  for (Eigen::Index k = 0; k < p.rows(); ++k) p(k, 2) += 1.5;
  const ColoredVertexSet v(p, c);
  const Camera cam = front_camera(97, 61, 80.0);
  const RasterImage one = rasterize(v, f, cam, Eigen::Vector3d::Ones());
  for (unsigned t : {2u, 4u, 7u}) CHECK(rasterize(v, f, cam, Eigen::Vector3d::Ones(), RasterOptions{t, nullptr}) == one);
}
