#include "smplpix/dataset.hpp"

#include "smplpix/body_model.hpp"
#include "smplpix/camera.hpp"
#include "smplpix/error.hpp"
#include "smplpix/io_util.hpp"
#include "smplpix/mesh_ops.hpp"
#include "smplpix/parallel.hpp"
#include "smplpix/raster.hpp"
#include "smplpix/rng.hpp"
#include "smplpix/splat.hpp"
#include "smplpix/synth.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace smplpix {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::string subject_name(int s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "subject_%04d", s);
  return buf;
}

std::string entry_stem(int s, int p, int c) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "subject_%04d_p%02d_c%03d", s, p, c);
  return buf;
}

}  // namespace

std::uint64_t subject_seed(std::uint64_t dataset_seed, int subject) {
  return splitmix64(splitmix64(dataset_seed) ^ static_cast<std::uint64_t>(subject));
}

void DatasetConfig::validate() const {
  require(subjects >= 1, "dataset: subjects must be >= 1");
  require(rig_size >= 1, "dataset: rig_size must be >= 1");
  require(cameras_per_subject >= 1 && cameras_per_subject <= rig_size,
          "dataset: cameras_per_subject must be in [1, rig_size]");
  require(rig_radius > 0.0, "dataset: rig_radius must be positive");
  require(poses_per_subject >= 1, "dataset: poses_per_subject must be >= 1");
  require(pose_sigma >= 0.0, "dataset: pose_sigma must be non-negative");
  require(width >= 1 && height >= 1, "dataset: image size must be positive");
  require(focal > 0.0, "dataset: focal must be positive");
  require(d_min < d_max, "dataset: depth range must satisfy d_min < d_max");
  require(train_ratio >= 0.0 && train_ratio <= 1.0, "dataset: train_ratio must be in [0, 1]");
  require(subject_height > 0.0, "dataset: subject_height must be positive");
  require(ground_truth_format == "png" || ground_truth_format == "imgf",
          "dataset: ground_truth_format must be \"png\" or \"imgf\"");
  require(background.allFinite() && background.minCoeff() >= 0.0 && background.maxCoeff() <= 1.0,
          "dataset: background must be in [0,1]");
}

DatasetConfig parse_dataset_config(const std::string& json_text, const fs::path& base_dir) {
  DatasetConfig c;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) fail(ErrorCode::Parse, "dataset config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "subjects") c.subjects = value.get<int>();
      else if (key == "cameras_per_subject") c.cameras_per_subject = value.get<int>();
      else if (key == "rig_size") c.rig_size = value.get<int>();
      else if (key == "rig_radius") c.rig_radius = value.get<double>();
      else if (key == "poses_per_subject") c.poses_per_subject = value.get<int>();
      else if (key == "pose_sigma") c.pose_sigma = value.get<double>();
      else if (key == "pose_file") {
        const fs::path p = value.get<std::string>();
        c.pose_file = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
      } else if (key == "width") c.width = value.get<int>();
      else if (key == "height") c.height = value.get<int>();
      else if (key == "focal") c.focal = value.get<double>();
      else if (key == "depth_range") {
        if (!value.is_array() || value.size() != 2)
          fail(ErrorCode::Parse, "dataset config: depth_range must be [d_min, d_max]");
        c.d_min = value[0].get<double>();
        c.d_max = value[1].get<double>();
      } else if (key == "train_ratio") c.train_ratio = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "subject_height") c.subject_height = value.get<double>();
      else if (key == "clutter") c.clutter = value.get<bool>();
      else if (key == "subdivide") c.subdivide = value.get<bool>();
      else if (key == "background") {
        if (!value.is_array() || value.size() != 3)
          fail(ErrorCode::Parse, "dataset config: background must be [r, g, b]");
        for (int i = 0; i < 3; ++i) c.background[i] = value[static_cast<std::size_t>(i)].get<double>();
      } else if (key == "ground_truth_format") c.ground_truth_format = value.get<std::string>();
      else fail(ErrorCode::Parameter, "dataset config: unknown key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("dataset config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string dataset_config_to_json(const DatasetConfig& c) {
  json j;
  j["subjects"] = c.subjects;
  j["cameras_per_subject"] = c.cameras_per_subject;
  j["rig_size"] = c.rig_size;
  j["rig_radius"] = c.rig_radius;
  j["poses_per_subject"] = c.poses_per_subject;
  j["pose_sigma"] = c.pose_sigma;
  if (!c.pose_file.empty()) j["pose_file"] = c.pose_file;
  j["width"] = c.width;
  j["height"] = c.height;
  j["focal"] = c.focal;
  j["depth_range"] = {c.d_min, c.d_max};
  j["train_ratio"] = c.train_ratio;
  j["seed"] = c.seed;
  j["subject_height"] = c.subject_height;
  j["clutter"] = c.clutter;
  j["subdivide"] = c.subdivide;
  j["background"] = {c.background[0], c.background[1], c.background[2]};
  j["ground_truth_format"] = c.ground_truth_format;
  return j.dump(2) + "\n";
}

namespace {

struct PosedSubject {
  ColoredVertexSet verts;
  Faces faces;
  ColoredVertexSet clutter;
  Faces clutter_faces;
};

struct PlannedEntry {
  int subject;
  int pose;
  int camera;
};

PoseParams sample_pose(const DatasetConfig& config, const std::vector<PoseParams>& frames, int subject,
                       int pose) {
  if (!frames.empty()) {
    const auto k = static_cast<std::size_t>(subject) * static_cast<std::size_t>(config.poses_per_subject) +
                   static_cast<std::size_t>(pose);
    return frames[k % frames.size()];
  }
  PoseParams p = a_pose();
  Rng rng(splitmix64(subject_seed(config.seed, subject) ^ (0x51ed27ull * static_cast<std::uint64_t>(pose + 1))));
  for (Eigen::Index i = 3; i < p.theta.size(); ++i) p.theta[i] += rng.normal(0.0, config.pose_sigma);
  return p;
}

PosedSubject pose_subject(const DatasetConfig& config, const SynthSubject& subject, const PoseParams& pose,
                          int s) {
  const BodyModel& model = subject.model;
  PosedSubject out;
  out.verts = ColoredVertexSet(pose_mesh(model, ShapeParams::zeros(model), pose), subject.rest.colors);
  out.faces = model.faces;
  if (config.subdivide) {
    auto sub = subdivide_midpoint(out.verts, out.faces);
    out.verts = std::move(sub.verts);
    out.faces = std::move(sub.faces);
  }
  if (config.clutter) {
    const ClutterMesh clutter = synth_clutter(subject, subject_seed(config.seed, s));
    const Points joints = regress_joints(model, model.template_vertices);
    const auto transforms = skinning_transforms(model, joints, pose);
    const JointTransform& t = transforms[static_cast<std::size_t>(clutter.joint)];
    Points moved = clutter.verts.positions;
    for (Eigen::Index i = 0; i < moved.rows(); ++i)
      moved.row(i) = (t.rotation * clutter.verts.positions.row(i).transpose() + t.translation).transpose();
    out.clutter = ColoredVertexSet(std::move(moved), clutter.verts.colors);
    out.clutter_faces = clutter.faces;
  }
  return out;
}

}  // namespace

DatasetManifest build_dataset(const DatasetConfig& config, const fs::path& out_dir, unsigned threads) {
  config.validate();
  threads = std::max(1u, threads);
  std::vector<PoseParams> frames;
  if (!config.pose_file.empty()) frames = load_pose_sequence(config.pose_file, kSynthJointCount);

  Intrinsics intr;
  intr.fx = intr.fy = config.focal;
  intr.cx = 0.5 * config.width;
  intr.cy = 0.5 * config.height;
  intr.width = config.width;
  intr.height = config.height;
  const std::vector<Camera> rig = camera_rig(config.rig_size, config.rig_radius, Eigen::Vector3d::Zero(), intr);

  // Plan entries: each subject sees a seeded subset of the rig.
  std::vector<PlannedEntry> plan;
  for (int s = 0; s < config.subjects; ++s) {
    std::vector<int> cams(static_cast<std::size_t>(config.rig_size));
    std::iota(cams.begin(), cams.end(), 0);
    Rng rng(splitmix64(subject_seed(config.seed, s) ^ 0xca3e7a5ull));
    for (int i = 0; i < config.cameras_per_subject; ++i) {
      const auto k = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(config.rig_size - i));
      std::swap(cams[static_cast<std::size_t>(i)], cams[k]);
    }
    cams.resize(static_cast<std::size_t>(config.cameras_per_subject));
    std::sort(cams.begin(), cams.end());
    for (int p = 0; p < config.poses_per_subject; ++p)
      for (int c : cams) plan.push_back({s, p, c});
  }

  SynthOptions synth_opts;
  synth_opts.height = config.subject_height;
  const auto P = static_cast<std::size_t>(config.poses_per_subject);
  std::vector<PosedSubject> posed(static_cast<std::size_t>(config.subjects) * P);
  parallel_for(static_cast<std::size_t>(config.subjects), threads, [&](std::size_t s) {
    const SynthSubject subject = synth_subject(subject_seed(config.seed, static_cast<int>(s)), synth_opts);
    for (std::size_t p = 0; p < P; ++p) {
      const PoseParams pose = sample_pose(config, frames, static_cast<int>(s), static_cast<int>(p));
      posed[s * P + p] = pose_subject(config, subject, pose, static_cast<int>(s));
    }
  });

  DatasetManifest manifest;
  manifest.d_min = config.d_min;
  manifest.d_max = config.d_max;
  manifest.width = config.width;
  manifest.height = config.height;
  manifest.entries.resize(plan.size());

  parallel_for(plan.size(), threads, [&](std::size_t e) {
    const PlannedEntry& pe = plan[e];
    const PosedSubject& ps = posed[static_cast<std::size_t>(pe.subject) * P + static_cast<std::size_t>(pe.pose)];
    const Camera& cam = rig[static_cast<std::size_t>(pe.camera)];
    const std::string stem = entry_stem(pe.subject, pe.pose, pe.camera);

    DatasetEntry entry;
    entry.subject_id = subject_name(pe.subject);
    entry.camera_id = pe.camera;
    entry.pose_id = pe.pose;
    entry.projection_path = "projections/" + stem + ".rgbd";
    entry.ground_truth_path = "ground_truth/" + stem + "." + config.ground_truth_format;
    entry.camera_path = "cameras/" + stem + ".json";

    RasterImage truth;
    if (ps.clutter_faces.empty()) {
      truth = rasterize(ps.verts, ps.faces, cam, config.background);
    } else {
      ColoredVertexSet all;
      const Eigen::Index n = ps.verts.size();
      all.positions.resize(n + ps.clutter.size(), 3);
      all.colors.resize(n + ps.clutter.size(), 3);
      all.positions << ps.verts.positions, ps.clutter.positions;
      all.colors << ps.verts.colors, ps.clutter.colors;
      Faces faces = ps.faces;
      for (Face f : ps.clutter_faces) {
        for (auto& i : f) i += static_cast<std::uint32_t>(n);
        faces.push_back(f);
      }
      truth = rasterize(all, faces, cam, config.background);
    }
    const ProjectionImage proj = normalize_depth(splat(ps.verts, cam), config.d_min, config.d_max);

    try {
      save_rgbd(proj, out_dir / entry.projection_path);
      save_rgb_image(truth, out_dir / entry.ground_truth_path);
      save_camera(cam, out_dir / entry.camera_path);
    } catch (const Error& err) {
      throw Error(err.code(), std::string("dataset: ") + err.what());
    }
    manifest.entries[e] = std::move(entry);
  });

  // Subject-level split.
  std::vector<int> order(static_cast<std::size_t>(config.subjects));
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(splitmix64(config.seed ^ 0x5b1177ull));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(split_rng.below(i))]);
  const auto n_train = static_cast<std::size_t>(std::llround(config.train_ratio * config.subjects));
  for (std::size_t i = 0; i < order.size(); ++i)
    manifest.split[subject_name(order[i])] = i < n_train ? Split::Train : Split::Test;

  write_file_atomic(out_dir / kManifestName, manifest_to_json(manifest));
  return manifest;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["version"] = 1;
  j["image_size"] = {m.width, m.height};
  j["depth_range"] = {m.d_min, m.d_max};
  json split = json::object();
  for (const auto& [subject, s] : m.split) split[subject] = s == Split::Train ? "train" : "test";
  j["split"] = split;
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"subject_id", e.subject_id},
                       {"camera_id", e.camera_id},
                       {"pose_id", e.pose_id},
                       {"projection_path", e.projection_path},
                       {"ground_truth_path", e.ground_truth_path},
                       {"camera_path", e.camera_path}});
  }
  j["entries"] = entries;
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& json_text) {
  DatasetManifest m;
  try {
    const json j = json::parse(json_text);
    const auto& size = j.at("image_size");
    m.width = size.at(0).get<int>();
    m.height = size.at(1).get<int>();
    m.d_min = j.at("depth_range").at(0).get<double>();
    m.d_max = j.at("depth_range").at(1).get<double>();
    for (const auto& [subject, value] : j.at("split").items()) {
      const auto s = value.get<std::string>();
      if (s != "train" && s != "test") fail(ErrorCode::Format, "manifest: split must be train or test");
      m.split[subject] = s == "train" ? Split::Train : Split::Test;
    }
    for (const auto& e : j.at("entries")) {
      DatasetEntry entry;
      entry.subject_id = e.at("subject_id").get<std::string>();
      entry.camera_id = e.at("camera_id").get<int>();
      entry.pose_id = e.at("pose_id").get<int>();
      entry.projection_path = e.at("projection_path").get<std::string>();
      entry.ground_truth_path = e.at("ground_truth_path").get<std::string>();
      entry.camera_path = e.at("camera_path").get<std::string>();
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("manifest: ") + e.what());
  }
  return m;
}

DatasetManifest load_manifest(const fs::path& path) { return manifest_from_json(read_file_text(path)); }

void validate_manifest(const DatasetManifest& m, const fs::path& root) {
  if (m.width < 1 || m.height < 1) fail(ErrorCode::Format, "manifest: invalid image size");
  if (!(m.d_min < m.d_max)) fail(ErrorCode::Format, "manifest: invalid depth range");
  for (const auto& e : m.entries) {
    if (!m.split.count(e.subject_id))
      fail(ErrorCode::Format, "manifest: subject " + e.subject_id + " has no split assignment");
    for (const auto* rel : {&e.projection_path, &e.ground_truth_path, &e.camera_path}) {
      if (fs::path(*rel).is_absolute()) fail(ErrorCode::Format, "manifest: absolute path " + *rel);
      if (!fs::exists(root / *rel)) fail(ErrorCode::Format, "manifest: missing file " + *rel);
    }
  }
}

}  // namespace smplpix
