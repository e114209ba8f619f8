#pragma once

#include "smplpix/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace smplpix {

inline constexpr std::int32_t kRootParent = -1;

// Blend-skinned body model. Tensors indexed per vertex are flattened so that
// row 3*v + c holds coordinate c of vertex v.
struct BodyModel {
  Points template_vertices;         // N x 3, rest pose, meters
  Eigen::MatrixXd shape_basis;      // 3N x S, meters per unit coefficient
  Eigen::MatrixXd pose_basis;       // 3N x 9(J-1), meters per unit pose feature
  Eigen::MatrixXd joint_regressor;  // J x N
  Eigen::MatrixXd skin_weights;     // N x J, rows sum to 1
  std::vector<std::int32_t> parents;  // J entries, kRootParent for the root
  Faces faces;
  std::optional<UvCoords> uv;       // N x 2 in [0,1]^2
  std::optional<Points> colors;     // N x 3, carried by subject-specific models

  Eigen::Index vertex_count() const { return template_vertices.rows(); }
  Eigen::Index joint_count() const { return static_cast<Eigen::Index>(parents.size()); }
  Eigen::Index shape_dims() const { return shape_basis.cols(); }
  Eigen::Index pose_feature_count() const { return 9 * (joint_count() - 1); }

  // Throws Error(Parameter) naming the first violated invariant.
  void validate() const;

  // The 6890-vertex, 24-joint, 10-shape reference layout.
  bool is_reference_topology() const;
};

struct ShapeParams {
  Eigen::VectorXd beta;

  static ShapeParams zeros(const BodyModel& model) {
    return {Eigen::VectorXd::Zero(model.shape_dims())};
  }
};

// Axis-angle per joint, 3 entries per joint in joint index order (root included).
struct PoseParams {
  Eigen::VectorXd theta;

  static PoseParams zeros(const BodyModel& model) {
    return {Eigen::VectorXd::Zero(3 * model.joint_count())};
  }

  Eigen::Vector3d joint(Eigen::Index j) const { return theta.segment<3>(3 * j); }
};

// Returns joint indices ordered so that every parent precedes its children.
// Throws if `parents` is not a single rooted tree.
std::vector<std::int32_t> kinematic_order(const std::vector<std::int32_t>& parents);

Eigen::Index root_joint(const std::vector<std::int32_t>& parents);

// Rodrigues formula; exactly the identity for a zero vector.
Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& axis_angle);

Points shape_offsets(const BodyModel& model, const ShapeParams& shape);

// Flattened (R_j - I), row-major, for every non-root joint in increasing index order.
Eigen::VectorXd pose_features(const BodyModel& model, const PoseParams& pose);

Points pose_offsets(const BodyModel& model, const PoseParams& pose);

// J x 3 joint positions regressed from `rest` (N x 3).
Points regress_joints(const BodyModel& model, const Points& rest);

Points joint_locations(const BodyModel& model, const ShapeParams& shape);

// Rigid transform per joint that maps rest-pose points to posed points, i.e. the
// forward-kinematics world transform composed with the inverse rest joint offset.
struct JointTransform {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;
};
std::vector<JointTransform> skinning_transforms(const BodyModel& model, const Points& joints,
                                                const PoseParams& pose);

// Blends `transforms` with the model's skinning weights and applies them to `rest`.
Points blend_skin(const BodyModel& model, const Points& rest,
                  const std::vector<JointTransform>& transforms);

Points pose_mesh(const BodyModel& model, const ShapeParams& shape, const PoseParams& pose);

// Recovers the subject-specific rest template from a posed registration. Joint
// locations are solved jointly with the template so that they equal the
// regressor applied to the returned template. Colors pass through.
ColoredVertexSet unpose(const BodyModel& model, const ColoredVertexSet& posed,
                        const PoseParams& pose);

// Poses a subject-specific template with joints regressed from that template.
ColoredVertexSet repose_subject(const ColoredVertexSet& template_star, const BodyModel& model,
                                const PoseParams& pose);

// Largest/smallest singular value ratio above which a blended skinning matrix
// is treated as singular.
inline constexpr double kMaxSkinningCondition = 1e8;

// Binary "BSM1" container.
void save_body_model(const BodyModel& model, const std::filesystem::path& path);
BodyModel load_body_model(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_body_model(const BodyModel& model);
BodyModel decode_body_model(const std::vector<std::uint8_t>& bytes);

// JSON array of frames, each an array of 3*J radians.
std::vector<PoseParams> load_pose_sequence(const std::filesystem::path& path,
                                           Eigen::Index joint_count);
std::vector<PoseParams> parse_pose_sequence(const std::string& json_text,
                                            Eigen::Index joint_count);

}  // namespace smplpix
