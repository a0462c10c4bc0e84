#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prosobench {

/// Base of every error raised by the toolkit. `module()` names the owning
/// module ("corpus-io", "duration", ...) and is prefixed to `what()`.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string kind, const std::string& message)
      : std::runtime_error(module + ": " + kind + ": " + message),
        module_(std::move(module)),
        kind_(std::move(kind)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string module_;
  std::string kind_;
};

#define PROSOBENCH_DEFINE_ERROR(Name, Module)                         \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& message)                         \
        : Error(Module, #Name, message) {}                            \
  };

// corpus-io
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error("corpus-io", "ParseError",
              line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  ParseError(std::string module, const std::string& message, std::size_t line)
      : Error(std::move(module), "ParseError",
              line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  /// 1-based line (or row) number, 0 when not applicable.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};
PROSOBENCH_DEFINE_ERROR(MissingTier, "corpus-io")
PROSOBENCH_DEFINE_ERROR(InvalidInterval, "corpus-io")

class AlignmentError : public Error {
 public:
  explicit AlignmentError(const std::string& message, std::string module = "corpus-io")
      : Error(std::move(module), "AlignmentError", message) {}
};

// duration
PROSOBENCH_DEFINE_ERROR(SplitError, "duration")
PROSOBENCH_DEFINE_ERROR(FitError, "duration")
PROSOBENCH_DEFINE_ERROR(MissingAnnotation, "duration")

// prominence
PROSOBENCH_DEFINE_ERROR(UnsupportedFormat, "prominence")
PROSOBENCH_DEFINE_ERROR(SignalTooShort, "prominence")

// benchset
PROSOBENCH_DEFINE_ERROR(FoldError, "benchset")

// evaluate
PROSOBENCH_DEFINE_ERROR(UndefinedCorrelation, "evaluate")

/// Raised by histogram/statistics helpers on empty input.
class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& message, std::string module = "prominence")
      : Error(std::move(module), "EmptyInput", message) {}
};

/// Invalid argument to an operation (preconditions on numeric parameters).
class InvalidArgument : public Error {
 public:
  InvalidArgument(std::string module, const std::string& message)
      : Error(std::move(module), "InvalidArgument", message) {}
};

#undef PROSOBENCH_DEFINE_ERROR

}  // namespace prosobench
