#pragma once

#include <stdexcept>
#include <string>

namespace nlflow {

// Exit statuses of the CLI are the numeric values of these codes.
enum class ErrorCode : int {
  invalid_argument = 2,
  grid_mismatch = 3,
  no_boundary = 4,
  slab_margin = 5,
  not_certified = 6,
  too_large = 7,
  config = 8,
  io = 9,
  check_failed = 10,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what,
                    ErrorCode code = ErrorCode::invalid_argument) {
  if (!cond) fail(code, what);
}

}  // namespace nlflow
