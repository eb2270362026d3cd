#pragma once

#include <stdexcept>
#include <string>

namespace sldepth {

/// Argument outside the domain of a closed-form relation (e.g. non-positive depth).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Not enough distinct samples to run a resolution analysis.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies at or behind the camera plane.
class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Synthetic scene could not be ray cast (degenerate surface).
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rank-deficient support for a plane fit.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plane coefficients that cannot be mapped between disparity and world form.
class ConversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few or parallel plane correspondences for a rotation.
class UnderdeterminedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sldepth
