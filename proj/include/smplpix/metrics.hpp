#pragma once

#include "smplpix/image.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace smplpix {

// Reported for identical images instead of +infinity.
inline constexpr double kPsnrCapDb = 99.0;

struct MetricReport {
  double psnr_db = 0.0;
  double mse = 0.0;
  std::size_t n_pixels = 0;
};

// Peak value 1.0. `channels` interleaved values per pixel; when `mask` is
// non-empty only pixels with a nonzero mask byte contribute.
MetricReport psnr(std::span<const double> a, std::span<const double> b, int channels,
                  std::span<const std::uint8_t> mask = {});
MetricReport psnr(std::span<const float> a, std::span<const float> b, int channels,
                  std::span<const std::uint8_t> mask = {});
MetricReport psnr(const RgbImage& a, const RgbImage& b, std::span<const std::uint8_t> mask = {});

double psnr_from_mse(double mse);

// {"pair": [a, b], "psnr_db": x, "mse": y}
std::string metric_json_line(const std::string& path_a, const std::string& path_b,
                             const MetricReport& report);

}  // namespace smplpix
