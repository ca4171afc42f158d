#pragma once

#include <stdexcept>
#include <string>

namespace dgtau {

/// Raised for malformed inputs: bad sizes, ids, ranges, incompatible configurations.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical step fails (eigensolver, rank decision, instability).
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dgtau
