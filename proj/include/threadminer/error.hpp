#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace threadminer {

enum class ErrorKind {
  kParse,
  kValidation,
  kIo,
  kConfig,
  kDependency,
  kNumeric,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `kind` drives the CLI exit code and
/// the machine-parsable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a thread has no in-vocabulary token and cannot be projected.
class UnprojectableThread : public Error {
 public:
  explicit UnprojectableThread(std::string thread_id)
      : Error(ErrorKind::kValidation,
              "thread '" + thread_id + "' has no in-vocabulary tokens"),
        thread_id_(std::move(thread_id)) {}

  const std::string& thread_id() const { return thread_id_; }

 private:
  std::string thread_id_;
};

}  // namespace threadminer
