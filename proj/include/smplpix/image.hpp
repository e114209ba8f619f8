#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace smplpix {

// Row-major, channel-interleaved float raster.
template <int Channels>
struct Image {
  static constexpr int kChannels = Channels;

  int width = 0;
  int height = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, float fill) : width(w), height(h), data(static_cast<std::size_t>(w) * h * Channels, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * Channels;
  }
  float* at(int x, int y) { return data.data() + offset(x, y); }
  const float* at(int x, int y) const { return data.data() + offset(x, y); }

  friend bool operator==(const Image&, const Image&) = default;
};

using RgbImage = Image<3>;
using RasterImage = RgbImage;
using TextureImage = RgbImage;

// RGB plus depth. Background pixels hold (1, 1, 1, 1).
struct ProjectionImage : Image<4> {
  bool depth_normalized = false;

  ProjectionImage() = default;
  ProjectionImage(int w, int h) : Image<4>(w, h, 1.0f) {}

  bool is_background(int x, int y) const {
    const float* p = at(x, y);
    return p[0] == 1.0f && p[1] == 1.0f && p[2] == 1.0f && p[3] == 1.0f;
  }
  std::size_t occupied_count() const;

  friend bool operator==(const ProjectionImage&, const ProjectionImage&) = default;
};

// "RGBD" v1: magic, u8 version, u8 flags (bit0 depth normalized), u32 width,
// u32 height, then height*width*4 little-endian f32.
std::vector<std::uint8_t> encode_rgbd(const ProjectionImage& img);
ProjectionImage decode_rgbd(std::span<const std::uint8_t> bytes);
void save_rgbd(const ProjectionImage& img, const std::filesystem::path& path);
ProjectionImage load_rgbd(const std::filesystem::path& path);

// "IMGF" v1: same layout as RGBD with 3 channels and flags = 0.
std::vector<std::uint8_t> encode_imgf(const RgbImage& img);
RgbImage decode_imgf(std::span<const std::uint8_t> bytes);
void save_imgf(const RgbImage& img, const std::filesystem::path& path);
RgbImage load_imgf(const std::filesystem::path& path);

// 8-bit RGB PNG. Values are clamped to [0,1] and scaled by 255 rounding half up.
std::vector<std::uint8_t> encode_png(const RgbImage& img);
RgbImage decode_png(std::span<const std::uint8_t> bytes);
void save_png(const RgbImage& img, const std::filesystem::path& path);
RgbImage load_png(const std::filesystem::path& path);

std::uint8_t to_byte(float value);

// Dispatches on extension: ".png" or ".imgf".
void save_rgb_image(const RgbImage& img, const std::filesystem::path& path);
RgbImage load_rgb_image(const std::filesystem::path& path);

}  // namespace smplpix
