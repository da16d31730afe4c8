#pragma once

#include <stdexcept>
#include <string>

namespace lmz {

enum class ErrorKind {
  invalid_argument,
  invalid_distribution,
  precision,
  predictor_unavailable,
  corrupt_stream,
  unknown_version,
  predictor_mismatch,
  adapter_unavailable,
  protocol,
  io,
};

const char* to_string(ErrorKind kind);

// All library failures are reported through this one exception type; the
// kind selects the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit status for a failure of this kind: 2 bad arguments, 3 a
// predictor, codec or bridge that cannot serve, 4 I/O, 5 corrupt stream,
// 6 unknown version, 7 predictor mismatch, 1 anything else.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::predictor_unavailable:
    case ErrorKind::adapter_unavailable:
    case ErrorKind::protocol: return 3;
    case ErrorKind::io: return 4;
    case ErrorKind::corrupt_stream: return 5;
    case ErrorKind::unknown_version: return 6;
    case ErrorKind::predictor_mismatch: return 7;
    default: return 1;
  }
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace lmz
