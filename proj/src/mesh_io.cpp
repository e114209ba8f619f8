#include "smplpix/error.hpp"
#include "smplpix/io_util.hpp"
#include "smplpix/mesh_ops.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <cmath>
#include <sstream>
#include <string_view>

namespace smplpix {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_long(std::string_view s, long& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

[[noreturn]] void parse_fail(const std::string& name, std::size_t line, const std::string& msg) {
  fail(ErrorCode::Parse, name + ":" + std::to_string(line) + ": " + msg);
}

// Fills per-vertex uv from per-corner coordinates when every vertex maps to a
// single coordinate value.
void resolve_vertex_uv(Mesh& mesh) {
  const Eigen::Index n = mesh.verts.size();
  if (mesh.wedge_faces.empty() || mesh.wedge_faces.size() != mesh.faces.size()) return;
  UvCoords uv(n, 2);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  bool seam = false;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const auto v = static_cast<Eigen::Index>(mesh.faces[f][k]);
      const auto t = static_cast<Eigen::Index>(mesh.wedge_faces[f][k]);
      if (!seen[static_cast<std::size_t>(v)]) {
        uv.row(v) = mesh.wedge_uv.row(t);
        seen[static_cast<std::size_t>(v)] = 1;
      } else if (uv.row(v) != mesh.wedge_uv.row(t)) {
        seam = true;
      }
    }
  }
  if (!seam && std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; })) {
    mesh.uv = std::move(uv);
    mesh.wedge_uv.resize(0, 2);
    mesh.wedge_faces.clear();
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// OBJ

Mesh parse_obj(const std::string& text, const std::string& name) {
  std::vector<Eigen::Vector3d> pos;
  std::vector<Eigen::Vector3d> col;
  std::vector<Eigen::Vector2d> tex;
  Mesh mesh;
  bool any_color = false;
  bool all_color = true;
  bool any_face_without_uv = false;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;

    if (tok[0] == "v") {
      if (tok.size() != 4 && tok.size() != 5 && tok.size() != 7 && tok.size() != 8)
        parse_fail(name, line_no, "vertex needs 3 coordinates and optionally 3 colors");
      Eigen::Vector3d p;
      for (int i = 0; i < 3; ++i)
        if (!parse_double(tok[static_cast<std::size_t>(i + 1)], p[i]))
          parse_fail(name, line_no, "bad number '" + std::string(tok[static_cast<std::size_t>(i + 1)]) + "'");
      Eigen::Vector3d c(0, 0, 0);
      if (tok.size() >= 7) {
        // x y z r g b [w] is the common color extension.
        for (int i = 0; i < 3; ++i)
          if (!parse_double(tok[static_cast<std::size_t>(i + 4)], c[i]))
            parse_fail(name, line_no, "bad color '" + std::string(tok[static_cast<std::size_t>(i + 4)]) + "'");
        any_color = true;
      } else {
        all_color = false;
      }
      pos.push_back(p);
      col.push_back(c);
    } else if (tok[0] == "vt") {
      if (tok.size() < 3) parse_fail(name, line_no, "texture coordinate needs u and v");
      Eigen::Vector2d t;
      if (!parse_double(tok[1], t[0]) || !parse_double(tok[2], t[1]))
        parse_fail(name, line_no, "bad texture coordinate");
      tex.push_back(t);
    } else if (tok[0] == "f") {
      if (tok.size() < 4) parse_fail(name, line_no, "face needs at least 3 vertices");
      std::vector<std::uint32_t> vi;
      std::vector<long> ti;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const std::string_view corner = tok[k];
        const auto slash = corner.find('/');
        long v = 0;
        if (!parse_long(corner.substr(0, slash), v) || v == 0)
          parse_fail(name, line_no, "bad face index '" + std::string(corner) + "'");
        const long nv = static_cast<long>(pos.size());
        const long resolved = v > 0 ? v - 1 : nv + v;
        if (resolved < 0 || resolved >= nv) parse_fail(name, line_no, "face index out of range");
        vi.push_back(static_cast<std::uint32_t>(resolved));
        long t = -1;
        if (slash != std::string_view::npos) {
          auto rest = corner.substr(slash + 1);
          const auto slash2 = rest.find('/');
          rest = rest.substr(0, slash2);
          if (!rest.empty()) {
            long tv = 0;
            if (!parse_long(rest, tv) || tv == 0) parse_fail(name, line_no, "bad texture index");
            const long nt = static_cast<long>(tex.size());
            t = tv > 0 ? tv - 1 : nt + tv;
            if (t < 0 || t >= nt) parse_fail(name, line_no, "texture index out of range");
          }
        }
        ti.push_back(t);
      }
      const bool has_uv = std::all_of(ti.begin(), ti.end(), [](long t) { return t >= 0; });
      if (!has_uv) any_face_without_uv = true;
      for (std::size_t k = 1; k + 1 < vi.size(); ++k) {
        mesh.faces.push_back({vi[0], vi[k], vi[k + 1]});
        if (has_uv)
          mesh.wedge_faces.push_back({static_cast<std::uint32_t>(ti[0]), static_cast<std::uint32_t>(ti[k]),
                                      static_cast<std::uint32_t>(ti[k + 1])});
      }
    }
    // vn, o, g, s, usemtl, mtllib and others carry nothing we use.
  }

  const auto n = static_cast<Eigen::Index>(pos.size());
  mesh.verts.positions.resize(n, 3);
  mesh.verts.colors.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    mesh.verts.positions.row(i) = pos[static_cast<std::size_t>(i)].transpose();
    mesh.verts.colors.row(i) = col[static_cast<std::size_t>(i)].transpose();
  }
  if (!mesh.verts.positions.allFinite()) fail(ErrorCode::Parse, name + ": non-finite vertex position");
  mesh.has_colors = any_color && all_color;
  if (!mesh.has_colors) mesh.verts.colors.setZero();
  mesh.verts.colors = mesh.verts.colors.cwiseMax(0.0).cwiseMin(1.0);
  if (any_face_without_uv) {
    mesh.wedge_faces.clear();
  } else if (!mesh.wedge_faces.empty()) {
    mesh.wedge_uv.resize(static_cast<Eigen::Index>(tex.size()), 2);
    for (std::size_t i = 0; i < tex.size(); ++i) mesh.wedge_uv.row(static_cast<Eigen::Index>(i)) = tex[i].transpose();
    resolve_vertex_uv(mesh);
  }
  return mesh;
}

namespace {

void append_float(std::string& out, double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(value));
  out.append(buf, res.ptr);
}

}  // namespace

std::string format_obj(const Mesh& mesh) {
  std::string out;
  out.reserve(static_cast<std::size_t>(mesh.verts.size()) * 64 + mesh.faces.size() * 32);
  for (Eigen::Index i = 0; i < mesh.verts.size(); ++i) {
    out += "v";
    for (int c = 0; c < 3; ++c) {
      out += ' ';
      append_float(out, mesh.verts.positions(i, c));
    }
    if (mesh.has_colors) {
      for (int c = 0; c < 3; ++c) {
        out += ' ';
        append_float(out, mesh.verts.colors(i, c));
      }
    }
    out += '\n';
  }
  if (mesh.uv) {
    for (Eigen::Index i = 0; i < mesh.uv->rows(); ++i) {
      out += "vt ";
      append_float(out, (*mesh.uv)(i, 0));
      out += ' ';
      append_float(out, (*mesh.uv)(i, 1));
      out += '\n';
    }
  }
  for (const Face& f : mesh.faces) {
    out += 'f';
    for (std::uint32_t i : f) {
      const std::string idx = std::to_string(i + 1);
      out += ' ';
      out += idx;
      if (mesh.uv) {
        out += '/';
        out += idx;
      }
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// PLY

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType ply_type(std::string_view s, const std::string& name, std::size_t line) {
  if (s == "char" || s == "int8") return PlyType::Int8;
  if (s == "uchar" || s == "uint8") return PlyType::UInt8;
  if (s == "short" || s == "int16") return PlyType::Int16;
  if (s == "ushort" || s == "uint16") return PlyType::UInt16;
  if (s == "int" || s == "int32") return PlyType::Int32;
  if (s == "uint" || s == "uint32") return PlyType::UInt32;
  if (s == "float" || s == "float32") return PlyType::Float32;
  if (s == "double" || s == "float64") return PlyType::Float64;
  parse_fail(name, line, "unknown property type '" + std::string(s) + "'");
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

// Scale that maps the type's full range onto [0,1] for color channels.
double color_scale(PlyType t) {
  switch (t) {
    case PlyType::UInt8: return 1.0 / 255.0;
    case PlyType::UInt16: return 1.0 / 65535.0;
    case PlyType::Float32:
    case PlyType::Float64: return 1.0;
    default: return 1.0 / 255.0;
  }
}

struct PlyProperty {
  std::string name;
  PlyType type;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

// Reads scalars from either the ASCII token stream or the binary payload.
class PlySource {
 public:
  PlySource(const std::vector<std::uint8_t>& bytes, std::size_t pos, bool ascii, std::string name,
            std::size_t line)
      : bytes_(bytes), pos_(pos), ascii_(ascii), name_(std::move(name)), line_(line) {}

  double read(PlyType t) {
    return ascii_ ? read_ascii() : read_binary(t);
  }

 private:
  double read_ascii() {
    while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) {
      if (bytes_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= bytes_.size()) parse_fail(name_, line_, "unexpected end of data");
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
    double v = 0;
    std::string_view tok(reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start);
    if (!parse_double(tok, v)) parse_fail(name_, line_, "bad number '" + std::string(tok) + "'");
    return v;
  }

  double read_binary(PlyType t) {
    const std::size_t n = ply_size(t);
    if (pos_ + n > bytes_.size())
      fail(ErrorCode::Parse, name_ + ": truncated binary data at byte offset " + std::to_string(pos_));
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    auto load = [p]<typename T>(T) {
      T v;
      std::memcpy(&v, p, sizeof(T));
      return static_cast<double>(v);
    };
    switch (t) {
      case PlyType::Int8: return load(std::int8_t{});
      case PlyType::UInt8: return load(std::uint8_t{});
      case PlyType::Int16: return load(std::int16_t{});
      case PlyType::UInt16: return load(std::uint16_t{});
      case PlyType::Int32: return load(std::int32_t{});
      case PlyType::UInt32: return load(std::uint32_t{});
      case PlyType::Float32: return load(float{});
      case PlyType::Float64: return load(double{});
    }
    return 0;
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_;
  bool ascii_;
  std::string name_;
  std::size_t line_;
};

}  // namespace

Mesh parse_ply(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string {
    if (pos >= bytes.size()) fail(ErrorCode::Parse, name + ": header ends before end_header");
    std::size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    std::string line(reinterpret_cast<const char*>(bytes.data()) + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    ++line_no;
    return line;
  };

  if (next_line() != "ply") parse_fail(name, 1, "missing 'ply' magic");
  bool ascii = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  for (;;) {
    const std::string line = next_line();
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) parse_fail(name, line_no, "bad format line");
      if (tok[1] == "ascii") ascii = true;
      else if (tok[1] == "binary_little_endian") ascii = false;
      else parse_fail(name, line_no, "unsupported format '" + std::string(tok[1]) + "'");
      have_format = true;
    } else if (tok[0] == "element") {
      long count = 0;
      if (tok.size() != 3 || !parse_long(tok[2], count) || count < 0)
        parse_fail(name, line_no, "bad element line");
      elements.push_back({std::string(tok[1]), static_cast<std::size_t>(count), {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) parse_fail(name, line_no, "property before element");
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        prop.is_list = true;
        prop.count_type = ply_type(tok[2], name, line_no);
        prop.type = ply_type(tok[3], name, line_no);
        prop.name = tok[4];
      } else if (tok.size() == 3) {
        prop.type = ply_type(tok[1], name, line_no);
        prop.name = tok[2];
      } else {
        parse_fail(name, line_no, "bad property line");
      }
      elements.back().props.push_back(prop);
    } else {
      parse_fail(name, line_no, "unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_format) parse_fail(name, line_no, "missing format line");

  Mesh mesh;
  PlySource src(bytes, pos, ascii, name, line_no);
  for (const PlyElement& el : elements) {
    if (el.name == "vertex") {
      const auto n = static_cast<Eigen::Index>(el.count);
      mesh.verts.positions = Points::Zero(n, 3);
      mesh.verts.colors = Points::Zero(n, 3);
      int found_xyz = 0;
      int found_rgb = 0;
      bool found_uv = false;
      for (const auto& p : el.props) {
        if (p.name == "x" || p.name == "y" || p.name == "z") ++found_xyz;
        if (p.name == "red" || p.name == "green" || p.name == "blue") ++found_rgb;
        if (p.name == "s" || p.name == "u" || p.name == "texture_u") found_uv = true;
      }
      if (found_xyz != 3) parse_fail(name, line_no, "vertex element lacks x/y/z");
      mesh.has_colors = found_rgb == 3;
      if (found_uv) mesh.uv = UvCoords::Zero(n, 2);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (const auto& p : el.props) {
          if (p.is_list) {
            const auto count = static_cast<std::size_t>(src.read(p.count_type));
            for (std::size_t k = 0; k < count; ++k) src.read(p.type);
            continue;
          }
          const double v = src.read(p.type);
          if (p.name == "x") mesh.verts.positions(i, 0) = v;
          else if (p.name == "y") mesh.verts.positions(i, 1) = v;
          else if (p.name == "z") mesh.verts.positions(i, 2) = v;
          else if (p.name == "red") mesh.verts.colors(i, 0) = v * color_scale(p.type);
          else if (p.name == "green") mesh.verts.colors(i, 1) = v * color_scale(p.type);
          else if (p.name == "blue") mesh.verts.colors(i, 2) = v * color_scale(p.type);
          else if (mesh.uv && (p.name == "s" || p.name == "u" || p.name == "texture_u")) (*mesh.uv)(i, 0) = v;
          else if (mesh.uv && (p.name == "t" || p.name == "v" || p.name == "texture_v")) (*mesh.uv)(i, 1) = v;
        }
      }
    } else if (el.name == "face") {
      const PlyProperty* indices = nullptr;
      for (const auto& p : el.props)
        if (p.is_list && (p.name == "vertex_indices" || p.name == "vertex_index")) indices = &p;
      if (!indices) parse_fail(name, line_no, "face element lacks vertex_indices");
      for (std::size_t f = 0; f < el.count; ++f) {
        std::vector<std::uint32_t> poly;
        for (const auto& p : el.props) {
          if (!p.is_list) {
            src.read(p.type);
            continue;
          }
          const double count = src.read(p.count_type);
          if (count < 0 || count > 1e6) fail(ErrorCode::Parse, name + ": bad face list length");
          for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
            const double idx = src.read(p.type);
            if (&p == indices) {
              if (idx < 0 || idx >= static_cast<double>(mesh.verts.size()))
                fail(ErrorCode::Parse, name + ": face " + std::to_string(f) + " index out of range");
              poly.push_back(static_cast<std::uint32_t>(idx));
            }
          }
        }
        if (poly.size() < 3) fail(ErrorCode::Parse, name + ": face " + std::to_string(f) + " has fewer than 3 vertices");
        for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
      }
    } else {
      for (std::size_t i = 0; i < el.count; ++i)
        for (const auto& p : el.props) {
          if (p.is_list) {
            const auto count = static_cast<std::size_t>(src.read(p.count_type));
            for (std::size_t k = 0; k < count; ++k) src.read(p.type);
          } else {
            src.read(p.type);
          }
        }
    }
  }
  if (!mesh.verts.positions.allFinite()) fail(ErrorCode::Parse, name + ": non-finite vertex position");
  mesh.verts.colors = mesh.verts.colors.cwiseMax(0.0).cwiseMin(1.0);
  return mesh;
}

std::vector<std::uint8_t> format_ply(const Mesh& mesh, bool uchar_colors) {
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n";
  header << "element vertex " << mesh.verts.size() << "\n";
  header << "property float x\nproperty float y\nproperty float z\n";
  if (mesh.has_colors) {
    const char* t = uchar_colors ? "uchar" : "float";
    header << "property " << t << " red\nproperty " << t << " green\nproperty " << t << " blue\n";
  }
  if (mesh.uv) header << "property float s\nproperty float t\n";
  header << "element face " << mesh.faces.size() << "\n";
  header << "property list uchar uint vertex_indices\nend_header\n";
  ByteWriter w;
  w.magic(header.str());
  for (Eigen::Index i = 0; i < mesh.verts.size(); ++i) {
    for (int c = 0; c < 3; ++c) w.put(static_cast<float>(mesh.verts.positions(i, c)));
    if (mesh.has_colors) {
      for (int c = 0; c < 3; ++c) {
        if (uchar_colors) w.put(to_byte(static_cast<float>(mesh.verts.colors(i, c))));
        else w.put(static_cast<float>(mesh.verts.colors(i, c)));
      }
    }
    if (mesh.uv) {
      w.put(static_cast<float>((*mesh.uv)(i, 0)));
      w.put(static_cast<float>((*mesh.uv)(i, 1)));
    }
  }
  for (const Face& f : mesh.faces) {
    w.put(std::uint8_t{3});
    for (std::uint32_t i : f) w.put(i);
  }
  return std::move(w.buffer());
}

Mesh load_mesh(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".obj") return parse_obj(read_file_text(path), path.string());
  if (ext == ".ply") return parse_ply(read_file_bytes(path), path.string());
  fail(ErrorCode::Parameter, "unsupported mesh extension: " + path.string());
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path, bool ply_uchar_colors) {
  require(mesh.verts.positions.rows() == mesh.verts.colors.rows(), "save_mesh: colors and positions differ");
  const auto ext = path.extension().string();
  if (ext == ".obj") return write_file_atomic(path, format_obj(mesh));
  if (ext == ".ply") return write_file_atomic(path, format_ply(mesh, ply_uchar_colors));
  fail(ErrorCode::Parameter, "unsupported mesh extension: " + path.string());
}

}  // namespace smplpix
