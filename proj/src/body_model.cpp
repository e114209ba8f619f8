#include "smplpix/body_model.hpp"

#include "smplpix/error.hpp"
#include "smplpix/io_util.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <cmath>
#include <string>

namespace smplpix {

namespace {

void require_finite(const Eigen::VectorXd& v, const char* what) {
  require(v.allFinite(), std::string(what) + " contains non-finite values");
}

void check_shape(const BodyModel& model, const ShapeParams& shape) {
  require(shape.beta.size() == model.shape_dims(),
          "shape params: expected " + std::to_string(model.shape_dims()) + " coefficients, got " +
              std::to_string(shape.beta.size()));
  require_finite(shape.beta, "shape params");
}

void check_pose(const BodyModel& model, const PoseParams& pose) {
  require(pose.theta.size() == 3 * model.joint_count(),
          "pose params: expected " + std::to_string(3 * model.joint_count()) + " values, got " +
              std::to_string(pose.theta.size()));
  require_finite(pose.theta, "pose params");
}

Points unflatten(const Eigen::VectorXd& flat) {
  const Eigen::Index n = flat.size() / 3;
  Points out(n, 3);
  for (Eigen::Index v = 0; v < n; ++v) out.row(v) = flat.segment<3>(3 * v).transpose();
  return out;
}

}  // namespace

std::vector<std::int32_t> kinematic_order(const std::vector<std::int32_t>& parents) {
  const auto J = static_cast<std::int32_t>(parents.size());
  require(J > 0, "kinematic tree is empty");
  std::vector<std::vector<std::int32_t>> children(static_cast<std::size_t>(J));
  std::int32_t root = -1;
  for (std::int32_t j = 0; j < J; ++j) {
    const std::int32_t p = parents[static_cast<std::size_t>(j)];
    if (p == kRootParent) {
      require(root < 0, "kinematic tree has more than one root");
      root = j;
    } else {
      require(p >= 0 && p < J && p != j,
              "joint " + std::to_string(j) + " has invalid parent " + std::to_string(p));
      children[static_cast<std::size_t>(p)].push_back(j);
    }
  }
  require(root >= 0, "kinematic tree has no root");
  std::vector<std::int32_t> order;
  order.reserve(static_cast<std::size_t>(J));
  order.push_back(root);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::int32_t c : children[static_cast<std::size_t>(order[i])]) order.push_back(c);
  require(static_cast<std::int32_t>(order.size()) == J, "kinematic tree contains a cycle");
  return order;
}

Eigen::Index root_joint(const std::vector<std::int32_t>& parents) {
  for (std::size_t j = 0; j < parents.size(); ++j)
    if (parents[j] == kRootParent) return static_cast<Eigen::Index>(j);
  fail(ErrorCode::Parameter, "kinematic tree has no root");
}

void BodyModel::validate() const {
  const Eigen::Index N = vertex_count();
  const Eigen::Index J = joint_count();
  require(N > 0, "body model has no vertices");
  require(J > 0, "body model has no joints");
  require(template_vertices.allFinite(), "template has non-finite vertices");
  require(shape_basis.rows() == 3 * N, "shape basis row count must be 3N");
  require(pose_basis.rows() == 3 * N && pose_basis.cols() == pose_feature_count(),
          "pose basis must be 3N x 9(J-1)");
  require(joint_regressor.rows() == J && joint_regressor.cols() == N,
          "joint regressor must be J x N");
  require(skin_weights.rows() == N && skin_weights.cols() == J, "skin weights must be N x J");
  require(shape_basis.allFinite() && pose_basis.allFinite() && joint_regressor.allFinite(),
          "model tensors contain non-finite values");
  for (Eigen::Index v = 0; v < N; ++v) {
    const auto row = skin_weights.row(v);
    require(row.minCoeff() >= 0.0, "skin weights of vertex " + std::to_string(v) + " are negative");
    require(std::abs(row.sum() - 1.0) <= 1e-6,
            "skin weights of vertex " + std::to_string(v) + " do not sum to 1");
  }
  kinematic_order(parents);
  for (const Face& f : faces)
    for (std::uint32_t idx : f)
      require(static_cast<Eigen::Index>(idx) < N, "face index out of range");
  if (uv) require(uv->rows() == N, "uv must have one row per vertex");
  if (colors) require(colors->rows() == N, "colors must have one row per vertex");
}

bool BodyModel::is_reference_topology() const {
  return vertex_count() == 6890 && joint_count() == 24 && shape_dims() == 10;
}

Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

Points shape_offsets(const BodyModel& model, const ShapeParams& shape) {
  check_shape(model, shape);
  return unflatten(model.shape_basis * shape.beta);
}

Eigen::VectorXd pose_features(const BodyModel& model, const PoseParams& pose) {
  check_pose(model, pose);
  const Eigen::Index J = model.joint_count();
  const Eigen::Index root = root_joint(model.parents);
  Eigen::VectorXd features(model.pose_feature_count());
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < J; ++j) {
    if (j == root) continue;
    const Eigen::Matrix3d d = axis_angle_to_matrix(pose.joint(j)) - Eigen::Matrix3d::Identity();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) features[k++] = d(r, c);
  }
  return features;
}

Points pose_offsets(const BodyModel& model, const PoseParams& pose) {
  return unflatten(model.pose_basis * pose_features(model, pose));
}

Points regress_joints(const BodyModel& model, const Points& rest) {
  require(rest.rows() == model.vertex_count(), "vertex count does not match the model");
  return model.joint_regressor * rest;
}

Points joint_locations(const BodyModel& model, const ShapeParams& shape) {
  Points shaped = model.template_vertices + shape_offsets(model, shape);
  return regress_joints(model, shaped);
}

std::vector<JointTransform> skinning_transforms(const BodyModel& model, const Points& joints,
                                                const PoseParams& pose) {
  check_pose(model, pose);
  const auto order = kinematic_order(model.parents);
  const std::size_t J = model.parents.size();
  std::vector<Eigen::Matrix3d> world_rot(J);
  std::vector<Eigen::Vector3d> world_pos(J);
  for (std::int32_t j : order) {
    const auto ju = static_cast<std::size_t>(j);
    const Eigen::Matrix3d local = axis_angle_to_matrix(pose.joint(j));
    const Eigen::Vector3d rest_joint = joints.row(j).transpose();
    const std::int32_t p = model.parents[ju];
    if (p == kRootParent) {
      world_rot[ju] = local;
      world_pos[ju] = rest_joint;
    } else {
      const auto pu = static_cast<std::size_t>(p);
      world_rot[ju] = world_rot[pu] * local;
      world_pos[ju] = world_pos[pu] + world_rot[pu] * (rest_joint - joints.row(p).transpose());
    }
  }
  std::vector<JointTransform> out(J);
  for (std::size_t j = 0; j < J; ++j) {
    out[j].rotation = world_rot[j];
    out[j].translation =
        world_pos[j] - world_rot[j] * joints.row(static_cast<Eigen::Index>(j)).transpose();
  }
  return out;
}

namespace {

void blended_transform(const BodyModel& model, const std::vector<JointTransform>& transforms,
                       Eigen::Index v, Eigen::Matrix3d& rot, Eigen::Vector3d& trans) {
  rot.setZero();
  trans.setZero();
  const Eigen::Index J = model.joint_count();
  for (Eigen::Index j = 0; j < J; ++j) {
    const double w = model.skin_weights(v, j);
    if (w == 0.0) continue;
    const auto& t = transforms[static_cast<std::size_t>(j)];
    rot.noalias() += w * t.rotation;
    trans.noalias() += w * t.translation;
  }
}

}  // namespace

Points blend_skin(const BodyModel& model, const Points& rest,
                  const std::vector<JointTransform>& transforms) {
  require(rest.rows() == model.vertex_count(), "vertex count does not match the model");
  const Eigen::Index N = rest.rows();
  Points out(N, 3);
  Eigen::Matrix3d rot;
  Eigen::Vector3d trans;
  for (Eigen::Index v = 0; v < N; ++v) {
    blended_transform(model, transforms, v, rot, trans);
    out.row(v) = (rot * rest.row(v).transpose() + trans).transpose();
  }
  return out;
}

Points pose_mesh(const BodyModel& model, const ShapeParams& shape, const PoseParams& pose) {
  check_pose(model, pose);
  const Points shaped = model.template_vertices + shape_offsets(model, shape);
  const Points joints = regress_joints(model, shaped);
  const Points rest = shaped + pose_offsets(model, pose);
  return blend_skin(model, rest, skinning_transforms(model, joints, pose));
}

ColoredVertexSet unpose(const BodyModel& model, const ColoredVertexSet& posed,
                        const PoseParams& pose) {
  check_pose(model, pose);
  const Eigen::Index N = model.vertex_count();
  const Eigen::Index J = model.joint_count();
  require(posed.size() == N, "posed vertex count does not match the model");

  // The blended rotation part of every vertex transform does not depend on the
  // joint locations; the translation part is linear in them.
  const auto rotations_only = skinning_transforms(model, Points::Zero(J, 3), pose);
  std::vector<Eigen::Matrix3d> inv_rot(static_cast<std::size_t>(N));
  Eigen::Vector3d unused;
  for (Eigen::Index v = 0; v < N; ++v) {
    Eigen::Matrix3d rot;
    blended_transform(model, rotations_only, v, rot, unused);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(rot);
    const auto& s = svd.singularValues();
    if (!(s[2] > 0.0) || s[0] / s[2] > kMaxSkinningCondition)
      fail(ErrorCode::DegenerateSkinning,
           "blended skinning transform of vertex " + std::to_string(v) + " is singular");
    inv_rot[static_cast<std::size_t>(v)] = rot.inverse();
  }

  // Per-joint transform translations as a linear map of the 3J joint coordinates.
  const Eigen::Index dim = 3 * J;
  std::vector<Eigen::MatrixXd> trans_of_joints(static_cast<std::size_t>(J),
                                               Eigen::MatrixXd::Zero(3, dim));
  for (Eigen::Index b = 0; b < dim; ++b) {
    Points basis = Points::Zero(J, 3);
    basis(b / 3, b % 3) = 1.0;
    const auto t = skinning_transforms(model, basis, pose);
    for (Eigen::Index k = 0; k < J; ++k)
      trans_of_joints[static_cast<std::size_t>(k)].col(b) = t[static_cast<std::size_t>(k)].translation;
  }

  // Joints q must satisfy q = R * (Minv (x - t(q)) - B_P), with R the regressor.
  const Points pose_corr = pose_offsets(model, pose);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd per_vertex(3, dim);
  for (Eigen::Index v = 0; v < N; ++v) {
    const Eigen::Matrix3d& minv = inv_rot[static_cast<std::size_t>(v)];
    per_vertex.setZero();
    for (Eigen::Index k = 0; k < J; ++k) {
      const double w = model.skin_weights(v, k);
      if (w != 0.0) per_vertex.noalias() += w * trans_of_joints[static_cast<std::size_t>(k)];
    }
    const Eigen::MatrixXd lin = minv * per_vertex;
    const Eigen::Vector3d base = minv * posed.positions.row(v).transpose() -
                                 pose_corr.row(v).transpose();
    for (Eigen::Index j = 0; j < J; ++j) {
      const double r = model.joint_regressor(j, v);
      if (r == 0.0) continue;
      system.middleRows<3>(3 * j).noalias() += r * lin;
      rhs.segment<3>(3 * j).noalias() += r * base;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible())
    fail(ErrorCode::DegenerateSkinning, "joint locations of the unposed template are not determined");
  const Eigen::VectorXd q = lu.solve(rhs);
  Points joints(J, 3);
  for (Eigen::Index j = 0; j < J; ++j) joints.row(j) = q.segment<3>(3 * j).transpose();

  const auto transforms = skinning_transforms(model, joints, pose);
  Points rest(N, 3);
  Eigen::Matrix3d rot;
  Eigen::Vector3d trans;
  for (Eigen::Index v = 0; v < N; ++v) {
    blended_transform(model, transforms, v, rot, trans);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rot;
    m.topRightCorner<3, 1>() = trans;
    const Eigen::Vector4d x(posed.positions(v, 0), posed.positions(v, 1), posed.positions(v, 2), 1.0);
    const Eigen::Vector4d r = m.inverse() * x;
    rest.row(v) = r.head<3>().transpose() - pose_corr.row(v);
  }
  ColoredVertexSet out;
  out.positions = std::move(rest);
  out.colors = posed.colors;
  return out;
}

ColoredVertexSet repose_subject(const ColoredVertexSet& template_star, const BodyModel& model,
                                const PoseParams& pose) {
  require(template_star.size() == model.vertex_count(),
          "subject template vertex count does not match the model");
  const Points joints = regress_joints(model, template_star.positions);
  const Points rest = template_star.positions + pose_offsets(model, pose);
  ColoredVertexSet out;
  out.positions = blend_skin(model, rest, skinning_transforms(model, joints, pose));
  out.colors = template_star.colors;
  return out;
}

// ---------------------------------------------------------------------------
// BSM1 container

namespace {

constexpr std::uint32_t kFlagUv = 1u << 0;
constexpr std::uint32_t kFlagColors = 1u << 1;

template <typename Matrix>
void put_f32(ByteWriter& w, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.put(static_cast<float>(m(r, c)));
}

template <typename Matrix>
void get_f32(ByteReader& r, Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = static_cast<double>(r.get<float>());
}

}  // namespace

std::vector<std::uint8_t> encode_body_model(const BodyModel& model) {
  model.validate();
  ByteWriter w;
  w.magic("BSM1");
  std::uint32_t flags = 0;
  if (model.uv) flags |= kFlagUv;
  if (model.colors) flags |= kFlagColors;
  w.put(static_cast<std::uint32_t>(model.vertex_count()));
  w.put(static_cast<std::uint32_t>(model.joint_count()));
  w.put(static_cast<std::uint32_t>(model.shape_dims()));
  w.put(static_cast<std::uint32_t>(model.faces.size()));
  w.put(flags);
  put_f32(w, model.template_vertices);
  put_f32(w, model.shape_basis);  // row 3v+c, column s: the N x 3 x S tensor in row-major order
  put_f32(w, model.pose_basis);
  put_f32(w, model.joint_regressor);
  put_f32(w, model.skin_weights);
  for (std::int32_t p : model.parents) w.put(p);
  for (const Face& f : model.faces)
    for (std::uint32_t i : f) w.put(i);
  if (model.uv) put_f32(w, *model.uv);
  if (model.colors) put_f32(w, *model.colors);
  return std::move(w.buffer());
}

BodyModel decode_body_model(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "BSM1");
  r.expect_magic("BSM1");
  const auto N = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  const auto J = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  const auto S = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  const auto F = static_cast<std::size_t>(r.get<std::uint32_t>());
  const std::uint32_t flags = r.get<std::uint32_t>();
  if (N == 0 || J == 0) fail(ErrorCode::Format, "BSM1: empty vertex or joint count");
  if ((flags & ~(kFlagUv | kFlagColors)) != 0) fail(ErrorCode::Format, "BSM1: unknown flags");
  // Reject sizes the payload cannot possibly hold before allocating.
  const double needed = 4.0 * (3.0 * N + 3.0 * N * S + 3.0 * N * 9.0 * (J - 1) + 2.0 * J * N + J +
                               3.0 * static_cast<double>(F));
  if (needed > static_cast<double>(r.remaining()))
    fail(ErrorCode::Format, "BSM1: header sizes exceed file length");

  BodyModel m;
  m.template_vertices.resize(N, 3);
  get_f32(r, m.template_vertices);
  m.shape_basis.resize(3 * N, S);
  get_f32(r, m.shape_basis);
  m.pose_basis.resize(3 * N, 9 * (J - 1));
  get_f32(r, m.pose_basis);
  m.joint_regressor.resize(J, N);
  get_f32(r, m.joint_regressor);
  m.skin_weights.resize(N, J);
  get_f32(r, m.skin_weights);
  m.parents.resize(static_cast<std::size_t>(J));
  for (auto& p : m.parents) p = r.get<std::int32_t>();
  m.faces.resize(F);
  for (Face& f : m.faces)
    for (auto& i : f) i = r.get<std::uint32_t>();
  if (flags & kFlagUv) {
    m.uv = UvCoords(N, 2);
    get_f32(r, *m.uv);
  }
  if (flags & kFlagColors) {
    m.colors = Points(N, 3);
    get_f32(r, *m.colors);
  }
  if (r.remaining() != 0) fail(ErrorCode::Format, "BSM1: trailing bytes after payload");
  try {
    m.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Format, std::string("BSM1: ") + e.what());
  }
  if (N == 6890 && !m.is_reference_topology())
    fail(ErrorCode::Format, "BSM1: 6890-vertex model must have 24 joints and 10 shape dims");
  return m;
}

void save_body_model(const BodyModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, encode_body_model(model));
}

BodyModel load_body_model(const std::filesystem::path& path) {
  return decode_body_model(read_file_bytes(path));
}

std::vector<PoseParams> parse_pose_sequence(const std::string& json_text, Eigen::Index joint_count) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Parse, std::string("pose sequence: ") + e.what());
  }
  if (!doc.is_array()) fail(ErrorCode::Parse, "pose sequence: expected a JSON array of frames");
  std::vector<PoseParams> frames;
  frames.reserve(doc.size());
  for (std::size_t f = 0; f < doc.size(); ++f) {
    const auto& frame = doc[f];
    if (!frame.is_array() || static_cast<Eigen::Index>(frame.size()) != 3 * joint_count)
      fail(ErrorCode::Parse, "pose sequence: frame " + std::to_string(f) + " must hold " +
                                 std::to_string(3 * joint_count) + " numbers");
    PoseParams p{Eigen::VectorXd(3 * joint_count)};
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (!frame[i].is_number())
        fail(ErrorCode::Parse, "pose sequence: frame " + std::to_string(f) + " has a non-number");
      p.theta[static_cast<Eigen::Index>(i)] = frame[i].get<double>();
    }
    if (!p.theta.allFinite())
      fail(ErrorCode::Parse, "pose sequence: frame " + std::to_string(f) + " is not finite");
    frames.push_back(std::move(p));
  }
  return frames;
}

std::vector<PoseParams> load_pose_sequence(const std::filesystem::path& path,
                                           Eigen::Index joint_count) {
  return parse_pose_sequence(read_file_text(path), joint_count);
}

}  // namespace smplpix
