#pragma once

#include <stdexcept>
#include <string>

namespace mvtrace {

// Base for every error raised by the library. `kind()` is a stable
// machine-readable tag used by the CLI when it reports failures as JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("parse", m) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error("validation", m) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

struct ConfigError : Error {
  ConfigError(const std::string& field, const std::string& m)
      : Error("config", field + ": " + m), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& m) : Error("numerical", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace mvtrace
