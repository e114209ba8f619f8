#include "smplpix/error.hpp"
#include "smplpix/parallel.hpp"
#include "smplpix/types.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace smplpix {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Parameter: return "parameter error";
    case ErrorCode::DegenerateSkinning: return "degenerate skinning";
    case ErrorCode::Topology: return "topology error";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Format: return "format error";
    case ErrorCode::State: return "state error";
  }
  return "unknown error";
}

ColoredVertexSet::ColoredVertexSet(Points p, Points c)
    : positions(std::move(p)), colors(std::move(c)) {
  validate_and_clamp();
}

void ColoredVertexSet::validate_and_clamp() {
  require(positions.rows() == colors.rows(),
          "colored vertex set: positions and colors differ in length");
  require(positions.allFinite(), "colored vertex set: non-finite position");
  colors = colors.cwiseMax(0.0).cwiseMin(1.0);
}

ColoredVertexSet with_uniform_color(const Points& positions, const Eigen::Vector3d& rgb) {
  Points colors(positions.rows(), 3);
  colors.rowwise() = rgb.transpose();
  return ColoredVertexSet(positions, std::move(colors));
}

unsigned resolve_threads(int requested) noexcept {
  if (requested > 0) return static_cast<unsigned>(requested);
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_chunks(std::size_t n, unsigned threads,
                     const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers == 1) {
    body(0, n);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

}  // namespace smplpix
