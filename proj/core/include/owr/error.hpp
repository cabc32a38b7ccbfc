#pragma once

#include <stdexcept>
#include <string>

namespace owr {

/// Failure categories. Each maps onto one CLI exit code (see exit_code()).
enum class ErrorKind {
  Usage,         ///< bad command-line usage
  Config,        ///< invalid or unreadable configuration
  Data,          ///< malformed / inconsistent dataset, empty dataset
  Shape,         ///< dimension mismatch between inputs and model
  MissingClass,  ///< class id not present in the model
  EmptyModel,    ///< operation needs at least one known class
  Protocol,      ///< open-world protocol precondition violated
  Io,            ///< file could not be opened or written
  Numeric,       ///< non-finite value produced
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

/// 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
int exit_code(ErrorKind kind) noexcept;

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace owr
