#pragma once

#include <stdexcept>
#include <string>

namespace mhmap {

/// Non-finite argument or non-positive variance passed to a math kernel.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Vector/matrix dimensions that do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration value, unknown key, or bad geometry request.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate element or singular matrix met during FEM assembly.
class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(const std::string& what, long element = -1)
      : std::runtime_error(what), element_(element) {}
  long element() const noexcept { return element_; }

 private:
  long element_;
};

/// Query point not contained in any mesh element.
class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mhmap
