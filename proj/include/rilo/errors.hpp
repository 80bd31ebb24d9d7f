#pragma once

#include <stdexcept>
#include <string>

namespace rilo {

// File could not be opened, read, or written.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// File opened fine but its contents do not match the expected format.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration value is missing, malformed, or inconsistent with others.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Input geometry does not constrain the quantity being solved for
// (e.g. rank-deficient normal equations from too few / collinear points).
struct DegenerateGeometry : std::runtime_error {
  explicit DegenerateGeometry(const std::string& what) : std::runtime_error(what) {}
};

// Robust estimation could not find a model with enough inlier support.
struct RobustEstimationFailure : std::runtime_error {
  explicit RobustEstimationFailure(const std::string& what) : std::runtime_error(what) {}
};

// A frame pair yielded too few usable correspondences to attempt estimation.
struct DegenerateFramePair : std::runtime_error {
  explicit DegenerateFramePair(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss or parameter.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rilo
