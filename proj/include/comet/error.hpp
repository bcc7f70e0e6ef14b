#pragma once

#include <stdexcept>
#include <string>

namespace comet {

// Exit-code categories used by the CLI: 2 usage, 3 data, 4 numeric.
enum class ErrorCode : int {
  usage = 2,
  data = 3,
  numeric = 4,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

private:
  ErrorCode code_;
};

inline Error usage_error(std::string msg) {
  return Error(ErrorCode::usage, std::move(msg));
}
inline Error data_error(std::string msg) {
  return Error(ErrorCode::data, std::move(msg));
}
inline Error numeric_error(std::string msg) {
  return Error(ErrorCode::numeric, std::move(msg));
}

} // namespace comet
