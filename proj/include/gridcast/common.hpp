#pragma once

#include <stdexcept>
#include <string>

namespace gridcast {

/// Code version stamped into run manifests.
inline constexpr const char kVersion[] = "0.1.0";

// Error taxonomy. Every failure mode surfaces as one of these so callers
// (CLI, tests) can report a one-line diagnostic and map to an exit status.

/// Tensor shape or rank mismatch.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed, missing, or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A value outside the mathematical domain of an operation
/// (zero targets in percentage terms, non-positive graph weights, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training could not proceed or diverged.
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Checkpoint or container file is unreadable, truncated, or inconsistent.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid run configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gridcast
