#pragma once

#include <stdexcept>
#include <string>

namespace intp {

// Failure categories surfaced to callers. The CLI maps each one to a
// distinct exit status.
enum class ErrorKind {
  kInvalidArgument = 1,
  kIo = 2,
  kFormat = 3,
  kDivisibility = 4,
  kWindowOverflow = 5,
  kNonFinite = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::kInvalidArgument, what);
}

}  // namespace intp
