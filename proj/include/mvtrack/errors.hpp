#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace mvtrack {

/// Base of every error the library throws. `kind()` is a stable,
/// machine-readable tag used in CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define MVTRACK_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

MVTRACK_DEFINE_ERROR(DegenerateConfiguration);
MVTRACK_DEFINE_ERROR(HorizonPoint);
MVTRACK_DEFINE_ERROR(NoFeetVisible);
MVTRACK_DEFINE_ERROR(NumericalBreakdown);
MVTRACK_DEFINE_ERROR(EmptyComponent);
MVTRACK_DEFINE_ERROR(NonMonotonicTime);
MVTRACK_DEFINE_ERROR(DuplicateId);
MVTRACK_DEFINE_ERROR(EmptyAccumulator);
MVTRACK_DEFINE_ERROR(EmptyInput);
MVTRACK_DEFINE_ERROR(DegenerateVariance);
MVTRACK_DEFINE_ERROR(WaypointOutsideSite);

#undef MVTRACK_DEFINE_ERROR

/// Malformed input file or configuration. Carries the offending location when
/// one is known; the CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message,
                           std::optional<std::string> file = std::nullopt,
                           std::optional<long> line = std::nullopt)
      : Error("ValidationError", compose(message, file, line)),
        file_(std::move(file)),
        line_(line) {}

  const std::optional<std::string>& file() const noexcept { return file_; }
  std::optional<long> line() const noexcept { return line_; }

 private:
  static std::string compose(const std::string& message,
                              const std::optional<std::string>& file,
                              std::optional<long> line) {
    std::string out;
    if (file) out += *file;
    if (line) out += (out.empty() ? "line " : ":") + std::to_string(*line);
    if (!out.empty()) out += ": ";
    return out + message;
  }

  std::optional<std::string> file_;
  std::optional<long> line_;
};

}  // namespace mvtrack
