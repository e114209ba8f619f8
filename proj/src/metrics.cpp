#include "smplpix/metrics.hpp"

#include "smplpix/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace smplpix {

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return kPsnrCapDb;
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

template <typename T>
MetricReport psnr_impl(std::span<const T> a, std::span<const T> b, int channels,
                       std::span<const std::uint8_t> mask) {
  require(channels > 0, "psnr: channel count must be positive");
  require(a.size() == b.size(), "psnr: image dimensions differ");
  require(a.size() % static_cast<std::size_t>(channels) == 0, "psnr: size is not a multiple of channels");
  const std::size_t pixels = a.size() / static_cast<std::size_t>(channels);
  require(mask.empty() || mask.size() == pixels, "psnr: mask size differs from pixel count");

  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!mask.empty() && mask[p] == 0) continue;
    ++counted;
    for (int c = 0; c < channels; ++c) {
      const std::size_t i = p * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c);
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      sum += d * d;
    }
  }
  require(counted > 0, "psnr: no pixels to compare");
  MetricReport r;
  r.n_pixels = counted;
  r.mse = sum / (static_cast<double>(counted) * channels);
  r.psnr_db = psnr_from_mse(r.mse);
  return r;
}

}  // namespace

MetricReport psnr(std::span<const double> a, std::span<const double> b, int channels,
                  std::span<const std::uint8_t> mask) {
  return psnr_impl(a, b, channels, mask);
}

MetricReport psnr(std::span<const float> a, std::span<const float> b, int channels,
                  std::span<const std::uint8_t> mask) {
  return psnr_impl(a, b, channels, mask);
}

MetricReport psnr(const RgbImage& a, const RgbImage& b, std::span<const std::uint8_t> mask) {
  require(a.width == b.width && a.height == b.height, "psnr: image dimensions differ");
  return psnr(std::span<const float>(a.data), std::span<const float>(b.data), 3, mask);
}

std::string metric_json_line(const std::string& path_a, const std::string& path_b,
                             const MetricReport& report) {
  nlohmann::json j;
  j["pair"] = {path_a, path_b};
  j["psnr_db"] = report.psnr_db;
  j["mse"] = report.mse;
  return j.dump();
}

}  // namespace smplpix
