#include "smplpix/synth.hpp"

#include "smplpix/error.hpp"
#include "smplpix/rng.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>

namespace smplpix {

namespace {

constexpr std::array<std::int32_t, kSynthJointCount> kParents = {
    -1,             // pelvis
    kPelvis,        // spine
    kSpine,         // chest
    kChest,         // neck
    kNeck,          // head
    kChest,         // left shoulder
    kLeftShoulder,  // left elbow
    kLeftElbow,     // left wrist
    kChest,         // right shoulder
    kRightShoulder, // right elbow
    kRightElbow,    // right wrist
    kPelvis,        // left hip
    kLeftHip,       // left knee
    kLeftKnee,      // left ankle
    kPelvis,        // right hip
    kRightHip,      // right knee
    kRightKnee,     // right ankle
};

// Joint whose segment continues this one, or -1 for a limb tip.
constexpr std::array<std::int32_t, kSynthJointCount> kContinuation = {
    kSpine, kChest, kNeck, kHead, -1,
    kLeftElbow, kLeftWrist, -1,
    kRightElbow, kRightWrist, -1,
    kLeftKnee, kLeftAnkle, -1,
    kRightKnee, kRightAnkle, -1,
};

enum class Garment { Shirt, Pants, Skin, Shoe };

constexpr std::array<Garment, kSynthJointCount> kGarment = {
    Garment::Pants, Garment::Shirt, Garment::Shirt, Garment::Skin, Garment::Skin,
    Garment::Shirt, Garment::Skin, Garment::Skin,
    Garment::Shirt, Garment::Skin, Garment::Skin,
    Garment::Pants, Garment::Pants, Garment::Shoe,
    Garment::Pants, Garment::Pants, Garment::Shoe,
};

bool is_arm(std::int32_t j) {
  return j == kLeftShoulder || j == kLeftElbow || j == kLeftWrist || j == kRightShoulder ||
         j == kRightElbow || j == kRightWrist;
}

bool is_torso(std::int32_t j) { return j == kPelvis || j == kSpine || j == kChest; }

Eigen::Vector3d random_color(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

// Orthonormal pair perpendicular to `axis`.
void ring_frame(const Eigen::Vector3d& axis, Eigen::Vector3d& u, Eigen::Vector3d& w) {
  const Eigen::Vector3d ref = std::abs(axis.y()) < 0.9 ? Eigen::Vector3d::UnitY() : Eigen::Vector3d::UnitZ();
  u = axis.cross(ref).normalized();
  w = axis.cross(u);
}

}  // namespace

const char* synth_joint_name(std::int32_t joint) {
  static constexpr std::array<const char*, kSynthJointCount> names = {
      "pelvis", "spine", "chest", "neck", "head",
      "left_shoulder", "left_elbow", "left_wrist",
      "right_shoulder", "right_elbow", "right_wrist",
      "left_hip", "left_knee", "left_ankle",
      "right_hip", "right_knee", "right_ankle"};
  return joint >= 0 && joint < kSynthJointCount ? names[static_cast<std::size_t>(joint)] : "unknown";
}

SynthSubject synth_subject(std::uint64_t seed, const SynthOptions& options) {
  require(options.height > 0.0, "synth: height must be positive");
  require(options.rings_per_segment >= 2 && options.ring_vertices >= 3, "synth: mesh resolution too low");
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);

  const double H = options.height * rng.uniform(0.9, 1.1);
  const double shoulder_w = rng.uniform(0.9, 1.1);
  const double arm_len = rng.uniform(0.92, 1.08);
  const double leg_len = rng.uniform(0.95, 1.05);
  const double girth = rng.uniform(0.8, 1.25);

  // Joint positions relative to the pelvis, as fractions of the height.
  std::array<Eigen::Vector3d, kSynthJointCount> joint;
  joint[kPelvis] = {0, 0, 0};
  joint[kSpine] = {0, 0.08, 0};
  joint[kChest] = {0, 0.18, 0};
  joint[kNeck] = {0, 0.30, 0};
  joint[kHead] = {0, 0.34, 0};
  for (int side = 0; side < 2; ++side) {
    const double sx = side == 0 ? 1.0 : -1.0;
    const std::int32_t sh = side == 0 ? kLeftShoulder : kRightShoulder;
    const double shoulder_x = 0.10 * shoulder_w;
    joint[sh] = {sx * shoulder_x, 0.28, 0};
    joint[sh + 1] = {sx * (shoulder_x + 0.16 * arm_len), 0.28, 0};
    joint[sh + 2] = {sx * (shoulder_x + 0.31 * arm_len), 0.28, 0};
    const std::int32_t hip = side == 0 ? kLeftHip : kRightHip;
    joint[hip] = {sx * 0.055, -0.03, 0};
    joint[hip + 1] = {sx * 0.06, -0.03 - 0.24 * leg_len, 0.005};
    joint[hip + 2] = {sx * 0.06, -0.03 - 0.46 * leg_len, 0};
  }
  for (auto& j : joint) j *= H;

  std::array<Eigen::Vector3d, kSynthJointCount> seg_end;
  for (std::int32_t j = 0; j < kSynthJointCount; ++j) {
    const std::int32_t c = kContinuation[static_cast<std::size_t>(j)];
    if (c >= 0) seg_end[static_cast<std::size_t>(j)] = joint[static_cast<std::size_t>(c)];
  }
  seg_end[kHead] = joint[kHead] + Eigen::Vector3d(0, 0.13 * H, 0.01 * H);
  seg_end[kLeftWrist] = joint[kLeftWrist] + Eigen::Vector3d(0.09 * H * arm_len, 0, 0);
  seg_end[kRightWrist] = joint[kRightWrist] + Eigen::Vector3d(-0.09 * H * arm_len, 0, 0);
  seg_end[kLeftAnkle] = joint[kLeftAnkle] + Eigen::Vector3d(0, -0.03 * H, 0.08 * H);
  seg_end[kRightAnkle] = joint[kRightAnkle] + Eigen::Vector3d(0, -0.03 * H, 0.08 * H);

  const std::array<double, kSynthJointCount> radius_frac = {
      0.090, 0.080, 0.092, 0.032, 0.058,
      0.030, 0.024, 0.018,
      0.030, 0.024, 0.018,
      0.050, 0.035, 0.024,
      0.050, 0.035, 0.024};

  // Per-garment colors.
  const Eigen::Vector3d shirt = random_color(rng, 0.1, 0.95);
  const Eigen::Vector3d stripe = (shirt * rng.uniform(0.4, 0.7)).cwiseMin(1.0);
  const Eigen::Vector3d pants = random_color(rng, 0.05, 0.7);
  const double tone = rng.uniform(0.35, 0.95);
  const Eigen::Vector3d skin(tone, tone * 0.78, tone * 0.62);
  const Eigen::Vector3d shoe = random_color(rng, 0.0, 0.4);
  const int stripe_period = 1 + static_cast<int>(rng.below(3));

  const int R = options.rings_per_segment;
  const int M = options.ring_vertices;
  const int per_segment = R * M + 2;
  const Eigen::Index N = static_cast<Eigen::Index>(per_segment) * kSynthJointCount;
  const Eigen::Index J = kSynthJointCount;

  BodyModel model;
  model.template_vertices.resize(N, 3);
  model.shape_basis = Eigen::MatrixXd::Zero(3 * N, 4);
  model.pose_basis = Eigen::MatrixXd::Zero(3 * N, 9 * (J - 1));
  model.joint_regressor = Eigen::MatrixXd::Zero(J, N);
  model.skin_weights = Eigen::MatrixXd::Zero(N, J);
  model.parents.assign(kParents.begin(), kParents.end());
  model.uv = UvCoords(N, 2);
  Points colors(N, 3);
  Points radial(N, 3);

  Eigen::Index v = 0;
  for (std::int32_t j = 0; j < kSynthJointCount; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const Eigen::Vector3d a = joint[ju];
    const Eigen::Vector3d b = seg_end[ju];
    const Eigen::Vector3d axis = (b - a).normalized();
    Eigen::Vector3d fu, fw;
    ring_frame(axis, fu, fw);
    const double r0 = radius_frac[ju] * H * girth;
    const std::int32_t parent = kParents[ju];
    const std::int32_t cont = kContinuation[ju];
    const Eigen::Index first = v;

    auto weights_at = [&](Eigen::Index vi, double s) {
      const double w_par = parent >= 0 ? std::max(0.0, 0.5 - s / 0.4) : 0.0;
      const double w_child = cont >= 0 ? std::max(0.0, (s - 0.8) / 0.4) : 0.0;
      if (parent >= 0) model.skin_weights(vi, parent) = w_par;
      if (cont >= 0) model.skin_weights(vi, cont) = w_child;
      model.skin_weights(vi, j) = 1.0 - w_par - w_child;
    };
    auto color_for = [&](int ring) -> Eigen::Vector3d {
      switch (kGarment[ju]) {
        case Garment::Shirt: return (ring / stripe_period) % 2 == 0 ? shirt : stripe;
        case Garment::Pants: return pants;
        case Garment::Skin: return skin;
        case Garment::Shoe: return shoe;
      }
      return skin;
    };

    for (int k = 0; k < R; ++k) {
      const double s = static_cast<double>(k) / (R - 1);
      const double r = r0 * (1.0 - 0.15 * s);
      const Eigen::Vector3d c = a + s * (b - a);
      for (int m = 0; m < M; ++m) {
        const double phi = 2.0 * M_PI * m / M;
        const Eigen::Vector3d dir = std::cos(phi) * fu + std::sin(phi) * fw;
        model.template_vertices.row(v) = (c + r * dir).transpose();
        radial.row(v) = (r * dir).transpose();
        weights_at(v, s);
        (*model.uv)(v, 0) = (j + static_cast<double>(m) / M) / static_cast<int>(kSynthJointCount);
        (*model.uv)(v, 1) = s;
        colors.row(v) = color_for(k).transpose();
        ++v;
      }
    }
    // Caps.
    for (int end = 0; end < 2; ++end) {
      const double s = end == 0 ? 0.0 : 1.0;
      const double r = r0 * (1.0 - 0.15 * s);
      const Eigen::Vector3d tip = end == 0 ? Eigen::Vector3d(a - 0.6 * r * axis) : Eigen::Vector3d(b + 0.6 * r * axis);
      model.template_vertices.row(v) = tip.transpose();
      radial.row(v) = ((end == 0 ? -0.6 : 0.6) * r * axis).transpose();
      weights_at(v, s);
      (*model.uv)(v, 0) = (j + 0.5) / static_cast<int>(kSynthJointCount);
      (*model.uv)(v, 1) = s;
      colors.row(v) = color_for(end == 0 ? 0 : R - 1).transpose();
      ++v;
    }

    // The first ring is centered on the joint.
    for (int m = 0; m < M; ++m) model.joint_regressor(j, first + m) = 1.0 / M;

    const auto idx = [&](int ring, int m) {
      return static_cast<std::uint32_t>(first + ring * M + ((m % M) + M) % M);
    };
    const auto pole_start = static_cast<std::uint32_t>(first + R * M);
    const auto pole_end = pole_start + 1;
    for (int k = 0; k + 1 < R; ++k) {
      for (int m = 0; m < M; ++m) {
        model.faces.push_back({idx(k, m), idx(k, m + 1), idx(k + 1, m + 1)});
        model.faces.push_back({idx(k, m), idx(k + 1, m + 1), idx(k + 1, m)});
      }
    }
    for (int m = 0; m < M; ++m) {
      model.faces.push_back({pole_start, idx(0, m + 1), idx(0, m)});
      model.faces.push_back({pole_end, idx(R - 1, m), idx(R - 1, m + 1)});
    }

    // Shape directions.
    for (Eigen::Index vi = first; vi < v; ++vi) {
      const Eigen::Vector3d p = model.template_vertices.row(vi).transpose();
      model.shape_basis(3 * vi + 1, 0) = 0.06 * p.y();
      model.shape_basis.block<3, 1>(3 * vi, 1) = 0.15 * radial.row(vi).transpose();
      if (is_arm(j)) {
        const double shoulder_x = joint[p.x() > 0 ? kLeftShoulder : kRightShoulder].x();
        model.shape_basis(3 * vi, 2) = 0.1 * (p.x() - shoulder_x);
      }
      if (is_torso(j)) {
        model.shape_basis(3 * vi, 3) = 0.1 * p.x();
        model.shape_basis(3 * vi + 2, 3) = 0.1 * p.z();
      }
    }
  }

  // Pose correctives: small seeded bulges along the radial direction of
  // vertices blended between two bones.
  for (Eigen::Index k = 1; k < J; ++k) {
    for (int f = 0; f < 9; ++f) {
      const double coeff = 0.004 * rng.normal();
      const Eigen::Index col = 9 * (k - 1) + f;
      for (Eigen::Index vi = 0; vi < N; ++vi) {
        const double w = model.skin_weights(vi, k);
        const double blend = 4.0 * w * (1.0 - w);
        if (blend == 0.0) continue;
        model.pose_basis.block<3, 1>(3 * vi, col) = coeff * blend * radial.row(vi).transpose();
      }
    }
  }

  model.colors = colors;
  model.validate();
  SynthSubject out;
  out.rest = ColoredVertexSet(model.template_vertices, colors);
  out.model = std::move(model);
  return out;
}

PoseParams a_pose(double arm_angle) {
  PoseParams p{Eigen::VectorXd::Zero(3 * kSynthJointCount)};
  p.theta[3 * kLeftShoulder + 2] = -arm_angle;
  p.theta[3 * kRightShoulder + 2] = arm_angle;
  return p;
}

ClutterMesh synth_clutter(const SynthSubject& subject, std::uint64_t seed) {
  Rng rng(seed ^ 0x5851f42d4c957f2dull);
  const Points joints = regress_joints(subject.model, subject.model.template_vertices);
  const Eigen::Vector3d head = joints.row(kHead).transpose();
  // Head capsule radius from its first ring.
  double r = 0.0;
  for (Eigen::Index i = 0; i < subject.model.vertex_count(); ++i)
    if (subject.model.joint_regressor(kHead, i) > 0.0)
      r = std::max(r, (subject.model.template_vertices.row(i).transpose() - head).norm());
  const double cap_r = 1.25 * r * rng.uniform(1.0, 1.2);
  const Eigen::Vector3d center = head + Eigen::Vector3d(0, 1.9 * r, -0.2 * r);
  const Eigen::Vector3d hair = random_color(rng, 0.02, 0.5);

  ClutterMesh out;
  const int lat = 6;
  const int lon = 16;
  const Eigen::Index n = lat * lon + 1;
  out.verts.positions.resize(n, 3);
  out.verts.colors.resize(n, 3);
  Eigen::Index v = 0;
  for (int i = 1; i <= lat; ++i) {
    const double polar = 0.5 * M_PI * 1.15 * i / lat;  // dome reaching slightly below the equator
    for (int k = 0; k < lon; ++k) {
      const double az = 2.0 * M_PI * k / lon;
      const Eigen::Vector3d dir(std::sin(polar) * std::cos(az), std::cos(polar), std::sin(polar) * std::sin(az));
      out.verts.positions.row(v) = (center + cap_r * dir).transpose();
      out.verts.colors.row(v) = hair.transpose();
      ++v;
    }
  }
  out.verts.positions.row(v) = (center + Eigen::Vector3d(0, cap_r, 0)).transpose();
  out.verts.colors.row(v) = hair.transpose();
  const auto top = static_cast<std::uint32_t>(v);
  auto idx = [&](int i, int k) { return static_cast<std::uint32_t>((i - 1) * lon + (k % lon)); };
  for (int k = 0; k < lon; ++k) out.faces.push_back({top, idx(1, k + 1), idx(1, k)});
  for (int i = 1; i < lat; ++i)
    for (int k = 0; k < lon; ++k) {
      out.faces.push_back({idx(i, k), idx(i, k + 1), idx(i + 1, k + 1)});
      out.faces.push_back({idx(i, k), idx(i + 1, k + 1), idx(i + 1, k)});
    }
  return out;
}

std::vector<Camera> camera_rig(int n, double radius, const Eigen::Vector3d& target,
                               const Intrinsics& intrinsics) {
  require(n >= 1, "camera rig: need at least one camera");
  require(radius > 0.0, "camera rig: radius must be positive");
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  const double el_lo = -20.0 * M_PI / 180.0;
  const double el_hi = 40.0 * M_PI / 180.0;
  std::vector<Camera> rig;
  rig.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double el = n == 1 ? 0.0 : el_lo + (el_hi - el_lo) * i / (n - 1);
    const double az = golden * i;
    const Eigen::Vector3d dir(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
    rig.push_back(look_at(target + radius * dir, target, Eigen::Vector3d::UnitY(), intrinsics));
  }
  return rig;
}

}  // namespace smplpix
