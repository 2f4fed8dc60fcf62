#pragma once

#include <stdexcept>
#include <string>

namespace mrnom {

enum class ErrorCode {
  InvalidArgument,
  Precondition,
  Degenerate,
  Io,
  Schema,
  Internal,
};

/// Single exception type for the library; the code drives the C API status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const char* what) {
  if (!cond) throw Error(code, what);
}

}  // namespace mrnom
