#pragma once

#include <stdexcept>
#include <string>

namespace qleak {

// Integration produced a state violating density-matrix invariants.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// A tune-up step could not bracket or refine its target.
class CalibrationError : public std::runtime_error {
 public:
  explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

// Optimizer hit a non-finite objective.
class OptimizationError : public std::runtime_error {
 public:
  explicit OptimizationError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration file rejected (unknown key, missing field, bad type).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qleak
