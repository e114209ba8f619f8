// Drives the smplpix executable end to end.
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kExe = SMPLPIX_EXE;
const std::string kFixtures = SMPLPIX_FIXTURES;

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Run run(const std::string& args) {
  Run r;
  const std::string cmd = "\"" + kExe + "\" " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& tag) {
    dir = fs::temp_directory_path() / ("smplpix_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

std::vector<std::uint8_t> bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::vector<std::uint8_t>> tree(const fs::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = bytes_of(e.path());
  return out;
}

std::size_t count_ext(const fs::path& root, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(root)) n += e.path().extension() == ext;
  return n;
}

void write_poses(const fs::path& path, int frames) {
  std::ofstream out(path);
  out << "[";
  for (int f = 0; f < frames; ++f) {
    out << (f ? "," : "") << "[";
    for (int k = 0; k < 51; ++k) out << (k ? "," : "") << (k >= 3 ? 0.02 * f * ((k % 5) - 2) : 0.0);
    out << "]";
  }
  out << "]";
}

std::string ply_header_line(const fs::path& p, const std::string& key) {
  std::ifstream in(p, std::ios::binary);
  std::string line;
  while (std::getline(in, line) && line != "end_header")
    if (line.rfind(key, 0) == 0) return line;
  return {};
}

}  // namespace

TEST_CASE("splat writes an RGBD file") {
  Scratch tmp("splat");
  const Run r = run("splat --mesh " + kFixtures + "/tetra_ascii.ply --camera " + kFixtures +
                    "/front_camera.json --out " + (tmp / "t.rgbd"));
  REQUIRE_MESSAGE(r.code == 0, r.out);
  const auto b = bytes_of(tmp / "t.rgbd");
  REQUIRE(b.size() == 14 + 64 * 48 * 16);
  CHECK(std::string(b.begin(), b.begin() + 4) == "RGBD");
  CHECK(b[4] == 1);
  CHECK(b[5] == 0);
  std::uint32_t w, h;
  std::memcpy(&w, b.data() + 6, 4);
  std::memcpy(&h, b.data() + 10, 4);
  CHECK(w == 64);
  CHECK(h == 48);

  const Run n = run("splat --mesh " + kFixtures + "/tetra_ascii.ply --camera " + kFixtures +
                    "/front_camera.json --depth-range 1 5 --out " + (tmp / "n.rgbd"));
  REQUIRE(n.code == 0);
  CHECK(bytes_of(tmp / "n.rgbd")[5] == 1);
}

TEST_CASE("animate renders every frame from every camera") {
  Scratch tmp("anim");
  write_poses(tmp.dir / "walk.json", 10);
  REQUIRE(run("synth-model --out " + (tmp / "m.bsm1")).code == 0);
  const Run r = run("animate --model " + (tmp / "m.bsm1") + " --poses " + (tmp / "walk.json") +
                    " --rig 8 --width 40 --height 52 --focal 30 --ground-truth --out " + (tmp / "out"));
  REQUIRE_MESSAGE(r.code == 0, r.out);
  CHECK(count_ext(tmp.dir / "out", ".rgbd") == 80);
  CHECK(count_ext(tmp.dir / "out" / "cameras", ".json") == 8);
  CHECK(count_ext(tmp.dir / "out" / "truth", ".png") == 80);
  CHECK(fs::exists(tmp.dir / "out" / "frame_0009_cam_007.rgbd"));
}

TEST_CASE("pose, reshape, unpose and repose") {
  Scratch tmp("pose");
  REQUIRE(run("synth-model --out " + (tmp / "m.bsm1") + " --rest-mesh " + (tmp / "rest.ply")).code == 0);
  REQUIRE(run("pose --model " + (tmp / "m.bsm1") + " --a-pose --out " + (tmp / "a.ply")).code == 0);
  const Run r = run("reshape --model " + (tmp / "m.bsm1") + " --a-pose --beta-delta 0=-2 --out " + (tmp / "thin.ply"));
  REQUIRE_MESSAGE(r.code == 0, r.out);
  CHECK(ply_header_line(tmp.dir / "thin.ply", "element vertex") == ply_header_line(tmp.dir / "a.ply", "element vertex"));
  CHECK(ply_header_line(tmp.dir / "thin.ply", "element face") == ply_header_line(tmp.dir / "a.ply", "element face"));
  CHECK(bytes_of(tmp.dir / "thin.ply") != bytes_of(tmp.dir / "a.ply"));

  REQUIRE(run("unpose --model " + (tmp / "m.bsm1") + " --mesh " + (tmp / "a.ply") + " --a-pose --out " + (tmp / "t.ply")).code == 0);
  REQUIRE(run("repose --model " + (tmp / "m.bsm1") + " --template " + (tmp / "t.ply") + " --a-pose --out " + (tmp / "b.ply")).code == 0);
  CHECK(ply_header_line(tmp.dir / "b.ply", "element vertex") == ply_header_line(tmp.dir / "a.ply", "element vertex"));

  REQUIRE(run("rasterize --mesh " + (tmp / "b.ply") + " --camera " + kFixtures + "/front_camera.json --out " + (tmp / "b.png")).code == 0);
  const Run m = run("metrics " + (tmp / "b.png") + " " + (tmp / "b.png"));
  REQUIRE(m.code == 0);
  CHECK(m.out.find("\"psnr_db\":99.0") != std::string::npos);
}

TEST_CASE("help lists each subcommand's flags") {
  const std::map<std::string, std::vector<std::string>> flags{
      {"synth-model", {"--out", "--height", "--rest-mesh"}},
      {"pose", {"--model", "--beta", "--poses", "--frame", "--a-pose", "--out"}},
      {"unpose", {"--model", "--mesh", "--out"}},
      {"repose", {"--model", "--template", "--out"}},
      {"reshape", {"--model", "--beta-delta", "--out"}},
      {"splat", {"--mesh", "--camera", "--depth-range", "--out"}},
      {"rasterize", {"--mesh", "--camera", "--background", "--out"}},
      {"animate", {"--model", "--poses", "--template", "--rig", "--radius", "--width", "--height", "--focal", "--out"}},
      {"dataset-gen", {"--config", "--out", "--subjects", "--cameras-per-subject", "--train-ratio"}},
      {"metrics", {"--mask"}},
  };
  const Run top = run("--help");
  CHECK(top.code == 0);
  CHECK(top.out.find("--threads") != std::string::npos);
  CHECK(top.out.find("--seed") != std::string::npos);
  for (const auto& [cmd, list] : flags) {
    CAPTURE(cmd);
    CHECK(top.out.find(cmd) != std::string::npos);
    const Run r = run(cmd + " --help");
    CHECK(r.code == 0);
    for (const auto& f : list) {
      CAPTURE(f);
      CHECK(r.out.find(f) != std::string::npos);
    }
  }
}

TEST_CASE("exit codes") {
  Scratch tmp("codes");
  CHECK(run("").code == 2);
  CHECK(run("no-such-command").code == 2);
  CHECK(run("splat --bogus").code == 2);
  CHECK(run("splat --camera x.json --out y.rgbd").code == 2);
  CHECK(run("dataset-gen --out " + (tmp / "d") + " --subjects 0").code == 2);
  CHECK(run("splat --mesh /nonexistent.ply --camera " + kFixtures + "/front_camera.json --out " + (tmp / "x.rgbd")).code == 1);
  CHECK(run("metrics a.png").code == 2);
}

TEST_CASE("dataset-gen is deterministic across runs and thread counts") {
  Scratch tmp("ds");
  const std::string common = " --seed 5 dataset-gen --subjects 3 --cameras-per-subject 2 --width 40 --height 52 --out ";
  const Run a = run("--threads 1" + common + (tmp / "a"));
  REQUIRE_MESSAGE(a.code == 0, a.out);
  CHECK(a.out.find("\"entries\":6") != std::string::npos);
  REQUIRE(run("--threads 3" + common + (tmp / "b")).code == 0);
  REQUIRE(run("dataset-gen --seed 5 --subjects 3 --cameras-per-subject 2 --width 40 --height 52 --out " + (tmp / "c")).code == 0);
  const auto ta = tree(tmp.dir / "a");
  CHECK(ta.size() == 6 * 3 + 1);
  CHECK(ta == tree(tmp.dir / "b"));
  CHECK(ta == tree(tmp.dir / "c"));

  std::ofstream(tmp.dir / "cfg.json") << R"({"subjects": 3, "cameras_per_subject": 2, "width": 40, "height": 52, "seed": 5})";
  REQUIRE(run("dataset-gen --config " + (tmp / "cfg.json") + " --out " + (tmp / "d")).code == 0);
  CHECK(ta == tree(tmp.dir / "d"));
}
