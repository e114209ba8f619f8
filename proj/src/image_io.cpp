#include "smplpix/image.hpp"

#include "smplpix/error.hpp"
#include "smplpix/io_util.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace smplpix {

std::size_t ProjectionImage::occupied_count() const {
  std::size_t n = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) n += is_background(x, y) ? 0 : 1;
  return n;
}

namespace {

constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kFlagDepthNormalized = 1u << 0;
// Bit 1 is reserved for an optional mask channel and must be clear.

template <int C>
void put_raster(ByteWriter& w, const char* magic, std::uint8_t flags, const Image<C>& img) {
  w.magic(magic);
  w.put(kVersion);
  w.put(flags);
  w.put(static_cast<std::uint32_t>(img.width));
  w.put(static_cast<std::uint32_t>(img.height));
  w.bytes(img.data.data(), img.data.size() * sizeof(float));
}

template <int C>
std::uint8_t get_raster(ByteReader& r, const char* magic, Image<C>& img) {
  r.expect_magic(magic);
  const auto version = r.get<std::uint8_t>();
  if (version != kVersion)
    fail(ErrorCode::Format, std::string(magic) + ": unsupported version " + std::to_string(version));
  const auto flags = r.get<std::uint8_t>();
  const auto w = r.get<std::uint32_t>();
  const auto h = r.get<std::uint32_t>();
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20))
    fail(ErrorCode::Format, std::string(magic) + ": invalid dimensions");
  const std::size_t count = static_cast<std::size_t>(w) * h * C;
  if (r.remaining() != count * sizeof(float))
    fail(ErrorCode::Format, std::string(magic) + ": payload size does not match dimensions");
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.data.resize(count);
  r.bytes(img.data.data(), count * sizeof(float));
  return flags;
}

}  // namespace

std::vector<std::uint8_t> encode_rgbd(const ProjectionImage& img) {
  ByteWriter w;
  put_raster(w, "RGBD", img.depth_normalized ? kFlagDepthNormalized : 0, img);
  return std::move(w.buffer());
}

ProjectionImage decode_rgbd(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "RGBD");
  ProjectionImage img;
  const std::uint8_t flags = get_raster(r, "RGBD", img);
  if (flags & ~kFlagDepthNormalized) fail(ErrorCode::Format, "RGBD: unsupported flags");
  img.depth_normalized = (flags & kFlagDepthNormalized) != 0;
  return img;
}

void save_rgbd(const ProjectionImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_rgbd(img));
}

ProjectionImage load_rgbd(const std::filesystem::path& path) {
  return decode_rgbd(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_imgf(const RgbImage& img) {
  ByteWriter w;
  put_raster(w, "IMGF", 0, img);
  return std::move(w.buffer());
}

RgbImage decode_imgf(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "IMGF");
  RgbImage img;
  if (get_raster(r, "IMGF", img) != 0) fail(ErrorCode::Format, "IMGF: unsupported flags");
  return img;
}

void save_imgf(const RgbImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_imgf(img));
}

RgbImage load_imgf(const std::filesystem::path& path) { return decode_imgf(read_file_bytes(path)); }

std::uint8_t to_byte(float value) {
  const double v = std::clamp(static_cast<double>(value), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

// ---------------------------------------------------------------------------
// PNG via libpng's simplified API.

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  require(img.width > 0 && img.height > 0, "png: empty image");
  std::vector<std::uint8_t> pixels(img.data.size());
  std::transform(img.data.begin(), img.data.end(), pixels.begin(), to_byte);

  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr))
    fail(ErrorCode::Io, std::string("png encode: ") + png.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr))
    fail(ErrorCode::Io, std::string("png encode: ") + png.message);
  out.resize(size);
  return out;
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    fail(ErrorCode::Format, std::string("png decode: ") + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    fail(ErrorCode::Format, std::string("png decode: ") + png.message);
  }
  RgbImage img(static_cast<int>(png.width), static_cast<int>(png.height), 0.0f);
  for (std::size_t i = 0; i < pixels.size(); ++i) img.data[i] = static_cast<float>(pixels[i]) / 255.0f;
  return img;
}

void save_png(const RgbImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_png(img));
}

RgbImage load_png(const std::filesystem::path& path) { return decode_png(read_file_bytes(path)); }

void save_rgb_image(const RgbImage& img, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") return save_png(img, path);
  if (ext == ".imgf") return save_imgf(img, path);
  fail(ErrorCode::Parameter, "unsupported image extension: " + path.string());
}

RgbImage load_rgb_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") return load_png(path);
  if (ext == ".imgf") return load_imgf(path);
  fail(ErrorCode::Parameter, "unsupported image extension: " + path.string());
}

}  // namespace smplpix
