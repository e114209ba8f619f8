#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace smplpix {

struct DatasetConfig {
  int subjects = 10;
  int cameras_per_subject = 20;
  int rig_size = 137;
  double rig_radius = 0.4;   // meters
  int poses_per_subject = 1;
  double pose_sigma = 0.05;  // radians, per axis-angle component around the A-pose
  std::string pose_file;     // optional JSON pose sequence, relative to the config
  int width = 308;
  int height = 410;
  double focal = 230.0;      // pixels, fx = fy; principal point at the image center
  double d_min = 0.1;
  double d_max = 0.7;
  double train_ratio = 0.8;
  std::uint64_t seed = 0;
  double subject_height = 0.5;
  bool clutter = false;      // hair geometry in the ground truth that the splat lacks
  bool subdivide = false;    // midpoint-subdivide the colored mesh before rendering
  Eigen::Vector3d background{1.0, 1.0, 1.0};
  std::string ground_truth_format = "png";  // "png" or "imgf"

  // Throws Error(Parameter) for out-of-range values.
  void validate() const;
};

// Unknown keys are rejected. Relative pose_file paths resolve against `base_dir`.
DatasetConfig parse_dataset_config(const std::string& json_text,
                                   const std::filesystem::path& base_dir = {});
std::string dataset_config_to_json(const DatasetConfig& config);

enum class Split { Train, Test };

struct DatasetEntry {
  std::string subject_id;
  int camera_id = 0;
  int pose_id = 0;
  std::string projection_path;   // relative to the manifest
  std::string ground_truth_path;
  std::string camera_path;
};

struct DatasetManifest {
  std::vector<DatasetEntry> entries;
  std::map<std::string, Split> split;
  double d_min = 0.1;
  double d_max = 0.7;
  int width = 0;
  int height = 0;
};

inline constexpr const char* kManifestName = "manifest.json";

// Renders every (subject, pose, camera) pair under `out_dir` and writes
// `out_dir/manifest.json`. Entry outputs do not depend on `threads`.
DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                              unsigned threads = 1);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& json_text);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Checks split leakage, consistent sizes and that every referenced file exists
// relative to `root`. Throws Error(Format) on the first violation.
void validate_manifest(const DatasetManifest& manifest, const std::filesystem::path& root);

// Per-subject generator seed derived from the dataset seed.
std::uint64_t subject_seed(std::uint64_t dataset_seed, int subject);

}  // namespace smplpix
