#pragma once

#include <stdexcept>
#include <string>

namespace smplpix {

enum class ErrorCode {
  Parameter = 1,
  DegenerateSkinning,
  Topology,
  Parse,
  Io,
  Format,
  State,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; the C API maps `code()` onto
// its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::Parameter, message);
}

}  // namespace smplpix
