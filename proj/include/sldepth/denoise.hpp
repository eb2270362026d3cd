#pragma once

#include <optional>

#include "sldepth/camera.hpp"
#include "sldepth/raster.hpp"

namespace sldepth {

/// Kernel parameters for the depth filters.
///
/// `sigma_d` (mm) selects the fixed-range bilateral filter, `k` (1/mm) the
/// adaptive one with sigma_d(p) = k Z(p)^2. The Gaussian filter uses neither.
struct FilterConfig {
  double sigma_s = 3.0;
  int radius = 0;  // 0 selects ceil(3 sigma_s)
  std::optional<double> sigma_d;
  std::optional<double> k;

  int effective_radius() const;

  /// Demo defaults: sigma_s = 3 px, k = three disparity steps propagated to depth.
  static FilterConfig adaptive_defaults(const Camera& cam);
};

enum class FilterMode { gaussian, bilateral, adaptive };

/// Throws ConfigError when `cfg` is inconsistent with `mode`.
void validate(const FilterConfig& cfg, FilterMode mode);

/// Spatial Gaussian mean over valid neighbours; invalid pixels stay invalid.
DepthMap gaussian_filter(const DepthMap& map, const FilterConfig& cfg);

/// Z'(p) = (1/W) sum_q w_s(q - p) w_d(Z(q) - Z(p)) Z(q) with a fixed range sigma.
DepthMap bilateral_filter(const DepthMap& map, const FilterConfig& cfg);

/// Bilateral filter whose range sigma at p is k Z(p)^2, taken from the input map.
DepthMap adaptive_bilateral_filter(const DepthMap& map, const FilterConfig& cfg);

DepthMap apply_filter(const DepthMap& map, const FilterConfig& cfg, FilterMode mode);

/// Per-pixel range sigma k Z^2 used by the adaptive filter (0 at invalid pixels).
Raster<double> adaptive_range_sigma(const DepthMap& map, double k);

}  // namespace sldepth
