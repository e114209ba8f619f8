// smplpix command-line front end. Everything goes through the C API.
#include "smplpix/smplpix.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input rather than a failed operation; exits with 2.
struct Usage : Failure {
  using Failure::Failure;
};

void check(spx_status s, const std::string& what) {
  if (s != SPX_OK) throw Failure(what + ": " + spx_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ModelPtr = std::unique_ptr<spx_model, Deleter<spx_model, spx_model_free>>;
using MeshPtr = std::unique_ptr<spx_mesh, Deleter<spx_mesh, spx_mesh_free>>;
using CameraPtr = std::unique_ptr<spx_camera, Deleter<spx_camera, spx_camera_free>>;
using ImagePtr = std::unique_ptr<spx_image, Deleter<spx_image, spx_image_free>>;
using PosesPtr = std::unique_ptr<spx_poses, Deleter<spx_poses, spx_poses_free>>;

ModelPtr load_model(const std::string& path) {
  spx_model* m = nullptr;
  check(spx_model_load(path.c_str(), &m), "loading model " + path);
  return ModelPtr(m);
}

MeshPtr load_mesh(const std::string& path) {
  spx_mesh* m = nullptr;
  check(spx_mesh_load(path.c_str(), &m), "loading mesh " + path);
  return MeshPtr(m);
}

CameraPtr load_camera(const std::string& path) {
  spx_camera* c = nullptr;
  check(spx_camera_load(path.c_str(), &c), "loading camera " + path);
  return CameraPtr(c);
}

ImagePtr load_image(const std::string& path) {
  spx_image* i = nullptr;
  check(spx_image_load(path.c_str(), &i), "loading image " + path);
  return ImagePtr(i);
}

spx_model_info info_of(const spx_model* m) {
  spx_model_info info{};
  check(spx_model_get_info(m, &info), "model info");
  return info;
}

// Pose selection shared by pose/unpose/repose/reshape.
struct PoseArgs {
  std::string poses_path;
  size_t frame = 0;
  bool a_pose = false;

  void add(CLI::App* app) {
    app->add_option("--poses", poses_path, "Pose sequence JSON (array of 3*J axis-angle frames)");
    app->add_option("--frame", frame, "Frame index in the pose sequence")->capture_default_str();
    app->add_flag("--a-pose", a_pose, "Use the built-in standing pose (procedural models only)");
  }

  // Empty vector means the rest pose.
  std::vector<double> resolve(const spx_model_info& info) const {
    if (a_pose && !poses_path.empty()) throw CLI::ValidationError("--a-pose and --poses are exclusive");
    std::vector<double> theta(3 * info.joint_count, 0.0);
    if (a_pose) {
      check(spx_synth_a_pose(theta.data(), theta.size()), "a-pose");
    } else if (!poses_path.empty()) {
      spx_poses* p = nullptr;
      check(spx_poses_load(poses_path.c_str(), info.joint_count, &p), "loading poses " + poses_path);
      PosesPtr poses(p);
      check(spx_poses_get(poses.get(), frame, theta.data(), theta.size()), "pose frame");
    } else {
      theta.clear();
    }
    return theta;
  }
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("not a number: '" + item + "'");
    }
  }
  return out;
}

void save_mesh(const spx_mesh* m, const std::string& path) { check(spx_mesh_save(m, path.c_str()), "writing " + path); }

void save_image(const spx_image* i, const std::string& path) {
  check(spx_image_save(i, path.c_str()), "writing " + path);
}

MeshPtr pose_model(const spx_model* model, const std::vector<double>& beta, const std::vector<double>& theta) {
  spx_mesh* out = nullptr;
  check(spx_model_pose(model, beta.empty() ? nullptr : beta.data(), beta.size(),
                       theta.empty() ? nullptr : theta.data(), theta.size(), &out),
        "posing");
  return MeshPtr(out);
}

ImagePtr splat_normalized(const spx_mesh* mesh, const spx_camera* cam, unsigned threads,
                          std::optional<std::pair<double, double>> range) {
  spx_image* raw = nullptr;
  check(spx_splat(mesh, cam, threads, &raw), "splatting");
  ImagePtr img(raw);
  if (!range) return img;
  spx_image* norm = nullptr;
  check(spx_normalize_depth(img.get(), range->first, range->second, &norm), "normalizing depth");
  return ImagePtr(norm);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename... Args>
std::string numbered(const char* fmt, Args... args) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smplpix: body-model posing, point splatting, reference rasterization and dataset generation"};
  app.require_subcommand(1);
  app.fallthrough();

  unsigned threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--threads", threads, "Worker threads, 0 = all cores")->envname("SMPLPIX_THREADS");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");

  // synth-model
  auto* synth = app.add_subcommand("synth-model", "Write a procedural capsule-person body model");
  std::string synth_out, synth_mesh;
  double synth_height = 0.0;
  synth->add_option("--out", synth_out, "Output .bsm1 path")->required();
  synth->add_option("--height", synth_height, "Standing height in meters (default 0.5)");
  synth->add_option("--rest-mesh", synth_mesh, "Also write the rest-pose mesh (.ply/.obj)");

  // pose
  auto* pose = app.add_subcommand("pose", "Pose a body model and write the mesh");
  std::string pose_model_path, pose_beta, pose_out;
  PoseArgs pose_args;
  pose->add_option("--model", pose_model_path, "Body model (.bsm1)")->required();
  pose->add_option("--beta", pose_beta, "Comma-separated shape coefficients");
  pose_args.add(pose);
  pose->add_option("--out", pose_out, "Output mesh (.ply/.obj)")->required();

  // unpose
  auto* unpose = app.add_subcommand("unpose", "Recover a subject template from a registered posed mesh");
  std::string unpose_model, unpose_mesh, unpose_out;
  PoseArgs unpose_args;
  unpose->add_option("--model", unpose_model, "Body model (.bsm1)")->required();
  unpose->add_option("--mesh", unpose_mesh, "Registered posed mesh (.ply/.obj)")->required();
  unpose_args.add(unpose);
  unpose->add_option("--out", unpose_out, "Output template mesh")->required();

  // repose
  auto* repose = app.add_subcommand("repose", "Pose a subject template with the model's skinning");
  std::string repose_model, repose_template, repose_out;
  PoseArgs repose_args;
  repose->add_option("--model", repose_model, "Body model (.bsm1)")->required();
  repose->add_option("--template", repose_template, "Subject template mesh")->required();
  repose_args.add(repose);
  repose->add_option("--out", repose_out, "Output mesh")->required();

  // reshape
  auto* reshape = app.add_subcommand("reshape", "Move along shape directions and write the mesh");
  std::string reshape_model, reshape_out;
  std::vector<std::string> reshape_deltas;
  PoseArgs reshape_args;
  reshape->add_option("--model", reshape_model, "Body model (.bsm1)")->required();
  reshape->add_option("--beta-delta", reshape_deltas, "Shape offset as index=value, repeatable")->required();
  reshape_args.add(reshape);
  reshape->add_option("--out", reshape_out, "Output mesh")->required();

  // splat
  auto* splat = app.add_subcommand("splat", "Project mesh vertices into an RGB-D image");
  std::string splat_mesh, splat_camera, splat_out;
  std::vector<double> splat_range;
  splat->add_option("--mesh", splat_mesh, "Colored vertex set (.ply/.obj)")->required();
  splat->add_option("--camera", splat_camera, "Camera JSON")->required();
  splat->add_option("--depth-range", splat_range, "Normalize depth with d_min d_max")->expected(2);
  splat->add_option("--out", splat_out, "Output .rgbd")->required();

  // rasterize
  auto* raster = app.add_subcommand("rasterize", "Render a colored mesh with the reference rasterizer");
  std::string raster_mesh, raster_camera, raster_out, raster_bg = "1,1,1";
  raster->add_option("--mesh", raster_mesh, "Colored mesh (.ply/.obj)")->required();
  raster->add_option("--camera", raster_camera, "Camera JSON")->required();
  raster->add_option("--background", raster_bg, "Background color r,g,b in [0,1]")->capture_default_str();
  raster->add_option("--out", raster_out, "Output image (.png/.imgf)")->required();

  // animate
  auto* animate = app.add_subcommand("animate", "Render a pose sequence from a ring of cameras");
  std::string anim_model, anim_poses, anim_out, anim_template;
  int anim_rig = 8, anim_width = 308, anim_height = 410;
  double anim_radius = 0.4, anim_focal = 230.0;
  std::vector<double> anim_range{0.1, 0.7};
  bool anim_truth = false;
  animate->add_option("--model", anim_model, "Body model (.bsm1)")->required();
  animate->add_option("--poses", anim_poses, "Pose sequence JSON")->required();
  animate->add_option("--template", anim_template, "Subject template to repose instead of the model mean");
  animate->add_option("--rig", anim_rig, "Number of cameras")->capture_default_str();
  animate->add_option("--radius", anim_radius, "Camera distance in meters")->capture_default_str();
  animate->add_option("--width", anim_width, "Image width")->capture_default_str();
  animate->add_option("--height", anim_height, "Image height")->capture_default_str();
  animate->add_option("--focal", anim_focal, "Focal length in pixels")->capture_default_str();
  animate->add_option("--depth-range", anim_range, "Depth normalization d_min d_max")->expected(2);
  animate->add_flag("--ground-truth", anim_truth, "Also rasterize reference images into truth/");
  animate->add_option("--out", anim_out, "Output directory")->required();

  // dataset-gen
  auto* dataset = app.add_subcommand("dataset-gen", "Generate projection / ground-truth training pairs");
  std::string ds_config, ds_out, ds_pose_file, ds_gt_format;
  std::optional<int> ds_subjects, ds_cameras, ds_rig, ds_poses, ds_width, ds_height;
  std::optional<double> ds_ratio;
  bool ds_clutter = false, ds_subdivide = false;
  dataset->add_option("--config", ds_config, "Dataset config JSON (flags override its keys)");
  dataset->add_option("--out", ds_out, "Output directory")->required();
  dataset->add_option("--subjects", ds_subjects, "Number of subjects");
  dataset->add_option("--cameras-per-subject", ds_cameras, "Views per subject");
  dataset->add_option("--rig-size", ds_rig, "Cameras in the rig");
  dataset->add_option("--poses-per-subject", ds_poses, "Poses per subject");
  dataset->add_option("--pose-file", ds_pose_file, "Pose sequence JSON to draw poses from");
  dataset->add_option("--width", ds_width, "Image width");
  dataset->add_option("--height", ds_height, "Image height");
  dataset->add_option("--train-ratio", ds_ratio, "Fraction of subjects in the training split");
  dataset->add_option("--ground-truth-format", ds_gt_format, "png or imgf");
  dataset->add_flag("--clutter", ds_clutter, "Add head geometry the splat does not see");
  dataset->add_flag("--subdivide", ds_subdivide, "Midpoint-subdivide meshes before rendering");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "PSNR between image pairs, one JSON line per pair");
  std::vector<std::string> metric_files;
  std::string metric_mask;
  metrics->add_option("images", metric_files, "Image pairs: a1 b1 [a2 b2 ...]")->required();
  metrics->add_option("--mask", metric_mask, "Image whose non-black pixels select the compared region");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      spx_model* m = nullptr;
      check(spx_model_synth(seed, synth_height, &m), "synthesizing model");
      ModelPtr model(m);
      check(spx_model_save(model.get(), synth_out.c_str()), "writing " + synth_out);
      if (!synth_mesh.empty()) save_mesh(pose_model(model.get(), {}, {}).get(), synth_mesh);
    } else if (*pose) {
      ModelPtr model = load_model(pose_model_path);
      const auto theta = pose_args.resolve(info_of(model.get()));
      const auto beta = pose_beta.empty() ? std::vector<double>{} : parse_list(pose_beta);
      save_mesh(pose_model(model.get(), beta, theta).get(), pose_out);
    } else if (*unpose) {
      ModelPtr model = load_model(unpose_model);
      MeshPtr posed = load_mesh(unpose_mesh);
      const auto theta = unpose_args.resolve(info_of(model.get()));
      spx_mesh* out = nullptr;
      check(spx_model_unpose(model.get(), posed.get(), theta.empty() ? nullptr : theta.data(), theta.size(), &out),
            "unposing");
      MeshPtr result(out);
      save_mesh(result.get(), unpose_out);
    } else if (*repose) {
      ModelPtr model = load_model(repose_model);
      MeshPtr tstar = load_mesh(repose_template);
      const auto theta = repose_args.resolve(info_of(model.get()));
      spx_mesh* out = nullptr;
      check(spx_model_repose(model.get(), tstar.get(), theta.empty() ? nullptr : theta.data(), theta.size(), &out),
            "reposing");
      MeshPtr result(out);
      save_mesh(result.get(), repose_out);
    } else if (*reshape) {
      ModelPtr model = load_model(reshape_model);
      const spx_model_info info = info_of(model.get());
      std::vector<double> beta(info.shape_dims, 0.0);
      for (const auto& d : reshape_deltas) {
        const auto eq = d.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--beta-delta expects index=value, got '" + d + "'");
        const auto idx = parse_list(d.substr(0, eq));
        const auto val = parse_list(d.substr(eq + 1));
        if (idx.size() != 1 || val.size() != 1 || idx[0] < 0 || idx[0] != static_cast<double>(static_cast<size_t>(idx[0])) ||
            static_cast<size_t>(idx[0]) >= beta.size())
          throw CLI::ValidationError("--beta-delta index out of range in '" + d + "'");
        beta[static_cast<size_t>(idx[0])] += val[0];
      }
      const auto theta = reshape_args.resolve(info);
      save_mesh(pose_model(model.get(), beta, theta).get(), reshape_out);
    } else if (*splat) {
      MeshPtr mesh = load_mesh(splat_mesh);
      CameraPtr cam = load_camera(splat_camera);
      std::optional<std::pair<double, double>> range;
      if (!splat_range.empty()) range = std::make_pair(splat_range[0], splat_range[1]);
      save_image(splat_normalized(mesh.get(), cam.get(), threads, range).get(), splat_out);
    } else if (*raster) {
      MeshPtr mesh = load_mesh(raster_mesh);
      CameraPtr cam = load_camera(raster_camera);
      const auto bg = parse_list(raster_bg);
      if (bg.size() != 3) throw CLI::ValidationError("--background expects r,g,b");
      spx_image* img = nullptr;
      check(spx_rasterize(mesh.get(), cam.get(), bg.data(), threads, &img), "rasterizing");
      ImagePtr out(img);
      save_image(out.get(), raster_out);
    } else if (*animate) {
      ModelPtr model = load_model(anim_model);
      const spx_model_info info = info_of(model.get());
      spx_poses* p = nullptr;
      check(spx_poses_load(anim_poses.c_str(), info.joint_count, &p), "loading poses " + anim_poses);
      PosesPtr poses(p);
      MeshPtr tstar = anim_template.empty() ? MeshPtr() : load_mesh(anim_template);

      if (anim_rig < 1) throw CLI::ValidationError("--rig must be >= 1");
      spx_intrinsics intr{anim_focal, anim_focal, 0.5 * anim_width, 0.5 * anim_height, anim_width, anim_height};
      const double target[3] = {0.0, 0.0, 0.0};
      std::vector<spx_camera*> raw(static_cast<size_t>(anim_rig), nullptr);
      check(spx_camera_rig(anim_rig, anim_radius, target, &intr, raw.data()), "building camera rig");
      std::vector<CameraPtr> rig;
      for (auto* c : raw) rig.emplace_back(c);

      const fs::path out_dir(anim_out);
      for (size_t c = 0; c < rig.size(); ++c) {
        const std::string path = (out_dir / "cameras" / numbered("cam_%03zu.json", c)).string();
        check(spx_camera_save(rig[c].get(), path.c_str()), "writing " + path);
      }
      const auto range = std::make_pair(anim_range.at(0), anim_range.at(1));
      std::vector<double> theta(3 * info.joint_count);
      const double white[3] = {1.0, 1.0, 1.0};
      for (size_t f = 0; f < spx_poses_count(poses.get()); ++f) {
        check(spx_poses_get(poses.get(), f, theta.data(), theta.size()), "pose frame");
        MeshPtr mesh;
        if (tstar) {
          spx_mesh* out = nullptr;
          check(spx_model_repose(model.get(), tstar.get(), theta.data(), theta.size(), &out), "reposing");
          mesh.reset(out);
        } else {
          mesh = pose_model(model.get(), {}, theta);
        }
        for (size_t c = 0; c < rig.size(); ++c) {
          const std::string stem = numbered("frame_%04zu_cam_%03zu", f, c);
          save_image(splat_normalized(mesh.get(), rig[c].get(), threads, range).get(),
                     (out_dir / (stem + ".rgbd")).string());
          if (anim_truth) {
            spx_image* img = nullptr;
            check(spx_rasterize(mesh.get(), rig[c].get(), white, threads, &img), "rasterizing");
            ImagePtr truth(img);
            save_image(truth.get(), (out_dir / "truth" / (stem + ".png")).string());
          }
        }
      }
    } else if (*dataset) {
      nlohmann::json cfg = nlohmann::json::object();
      std::string base_dir;
      if (!ds_config.empty()) {
        try {
          cfg = nlohmann::json::parse(read_text(ds_config));
        } catch (const nlohmann::json::exception& e) {
          throw Usage("parsing " + ds_config + ": " + e.what());
        }
        if (!cfg.is_object()) throw Usage(ds_config + ": expected a JSON object");
        base_dir = fs::absolute(ds_config).parent_path().string();
      }
      if (ds_subjects) cfg["subjects"] = *ds_subjects;
      if (ds_cameras) cfg["cameras_per_subject"] = *ds_cameras;
      if (ds_rig) cfg["rig_size"] = *ds_rig;
      if (ds_poses) cfg["poses_per_subject"] = *ds_poses;
      if (!ds_pose_file.empty()) cfg["pose_file"] = fs::absolute(ds_pose_file).string();
      if (ds_width) cfg["width"] = *ds_width;
      if (ds_height) cfg["height"] = *ds_height;
      if (ds_ratio) cfg["train_ratio"] = *ds_ratio;
      if (!ds_gt_format.empty()) cfg["ground_truth_format"] = ds_gt_format;
      if (ds_clutter) cfg["clutter"] = true;
      if (ds_subdivide) cfg["subdivide"] = true;
      if (seed_opt->count() > 0) cfg["seed"] = seed;
      size_t entries = 0;
      const spx_status st = spx_dataset_build(cfg.dump().c_str(), base_dir.empty() ? nullptr : base_dir.c_str(),
                                              ds_out.c_str(), threads, &entries);
      if (st == SPX_ERR_PARAMETER || st == SPX_ERR_PARSE) throw Usage(std::string("dataset config: ") + spx_last_error());
      check(st, "building dataset");
      std::cout << nlohmann::json{{"entries", entries}, {"manifest", (fs::path(ds_out) / "manifest.json").string()}}.dump()
                << "\n";
    } else if (*metrics) {
      if (metric_files.size() % 2 != 0) throw CLI::ValidationError("metrics expects an even number of images");
      std::vector<std::uint8_t> mask;
      spx_image_info mask_info{};
      if (!metric_mask.empty()) {
        ImagePtr m = load_image(metric_mask);
        check(spx_image_get_info(m.get(), &mask_info), "mask info");
        const float* data = spx_image_data(m.get());
        const size_t px = static_cast<size_t>(mask_info.width) * static_cast<size_t>(mask_info.height);
        mask.resize(px);
        for (size_t i = 0; i < px; ++i) {
          bool on = false;
          for (int c = 0; c < mask_info.channels; ++c) on = on || data[i * static_cast<size_t>(mask_info.channels) + static_cast<size_t>(c)] > 0.0f;
          mask[i] = on;
        }
      }
      for (size_t i = 0; i < metric_files.size(); i += 2) {
        ImagePtr a = load_image(metric_files[i]);
        ImagePtr b = load_image(metric_files[i + 1]);
        if (!mask.empty()) {
          spx_image_info ia{};
          check(spx_image_get_info(a.get(), &ia), "image info");
          if (ia.width != mask_info.width || ia.height != mask_info.height)
            throw Failure("mask size differs from " + metric_files[i]);
        }
        double db = 0.0, mse = 0.0;
        check(spx_psnr(a.get(), b.get(), mask.empty() ? nullptr : mask.data(), &db, &mse),
              "comparing " + metric_files[i] + " and " + metric_files[i + 1]);
        std::cout << nlohmann::json{{"pair", {metric_files[i], metric_files[i + 1]}}, {"psnr_db", db}, {"mse", mse}}.dump()
                  << "\n";
      }
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "smplpix: " << e.what() << "\n";
    return 2;
  } catch (const Usage& e) {
    std::cerr << "smplpix: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "smplpix: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
