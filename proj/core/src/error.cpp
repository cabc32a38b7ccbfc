#include "owr/error.hpp"

namespace owr {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Config: return "config";
    case ErrorKind::Data: return "data";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::MissingClass: return "missing-class";
    case ErrorKind::EmptyModel: return "empty-model";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Io: return "io";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Config:
      return 1;
    case ErrorKind::Numeric:
      return 3;
    default:
      return 2;
  }
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace owr
