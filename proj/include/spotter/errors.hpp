#pragma once

#include <stdexcept>
#include <string>

namespace spotter {

// Exception hierarchy. The CLI maps each family onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad run config, unknown keys, incompatible checkpoint.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed dataset records, unreadable images.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid geometry (degenerate boxes, non-finite deltas).
class GeometryError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf in activations or losses.
class NumericFault : public Error {
 public:
  using Error::Error;
};

enum class ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

}  // namespace spotter
