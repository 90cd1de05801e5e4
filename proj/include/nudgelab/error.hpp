#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nudgelab {

enum class ErrorKind {
  config,      // inconsistent dimensions or invalid configuration values
  usage,       // caller violated an operation's precondition
  input,       // out-of-range input values
  domain,      // mathematically invalid arguments
  validation,  // ingested data failed schema or invariant checks
  numeric,     // divergence or non-finite values during optimization
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace nudgelab
