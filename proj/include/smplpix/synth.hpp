#pragma once

#include "smplpix/body_model.hpp"
#include "smplpix/camera.hpp"
#include "smplpix/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace smplpix {

// Joint layout of the procedural capsule person.
enum SynthJoint : std::int32_t {
  kPelvis = 0,
  kSpine,
  kChest,
  kNeck,
  kHead,
  kLeftShoulder,
  kLeftElbow,
  kLeftWrist,
  kRightShoulder,
  kRightElbow,
  kRightWrist,
  kLeftHip,
  kLeftKnee,
  kLeftAnkle,
  kRightHip,
  kRightKnee,
  kRightAnkle,
  kSynthJointCount,
};

const char* synth_joint_name(std::int32_t joint);

struct SynthOptions {
  double height = 0.5;       // meters, before the per-subject scale jitter
  int rings_per_segment = 8;
  int ring_vertices = 12;
};

struct SynthSubject {
  BodyModel model;             // colors and uv populated
  ColoredVertexSet rest;       // template positions with the subject's colors
};

// Deterministic humanoid built from one capsule per joint, standing in a
// T-pose with the pelvis at the origin, +y up and facing +z. The model has
// four shape directions: height, girth, arm length and torso width.
SynthSubject synth_subject(std::uint64_t seed, const SynthOptions& options = {});

// Neutral standing pose with the arms lowered by `arm_angle` radians.
PoseParams a_pose(double arm_angle = 0.85);

// Extra rigid geometry attached to the head that the vertex set does not
// contain (a hair cap), in the subject's rest frame.
struct ClutterMesh {
  ColoredVertexSet verts;
  Faces faces;
  std::int32_t joint = kHead;
};
ClutterMesh synth_clutter(const SynthSubject& subject, std::uint64_t seed);

// `n` cameras on a sphere section of `radius` around `target`, all looking at
// it with +y as the up direction. Elevations sweep [-20, 40] degrees and
// azimuths advance by the golden angle; a single camera sits straight ahead
// (on +z).
std::vector<Camera> camera_rig(int n, double radius, const Eigen::Vector3d& target,
                               const Intrinsics& intrinsics);

}  // namespace smplpix
