#pragma once

#include <stdexcept>
#include <string>

namespace cast {

/// Broad failure class; the CLI maps each kind onto its exit code.
enum class ErrorKind {
  data,     // invariant violation in input data (exit 1)
  usage,    // bad arguments or missing input (exit 2)
  service,  // external service failure (exit 3)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error data_error(const std::string& message) {
  return Error(ErrorKind::data, message);
}
inline Error usage_error(const std::string& message) {
  return Error(ErrorKind::usage, message);
}
inline Error service_error(const std::string& message) {
  return Error(ErrorKind::service, message);
}

/// Re-throws `e` with "<stage>: " prepended, keeping its kind.
[[noreturn]] inline void rethrow_in_stage(const std::string& stage, const Error& e) {
  throw Error(e.kind(), stage + ": " + e.what());
}

}  // namespace cast
