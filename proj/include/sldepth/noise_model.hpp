#pragma once

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "sldepth/camera.hpp"
#include "sldepth/errors.hpp"
#include "sldepth/raster.hpp"

namespace sldepth {

namespace detail {
template <typename Scalar>
void require_positive(Scalar value, const char* what) {
  if (!(value > Scalar(0))) throw DomainError(std::string(what) + " must be positive");
}
}  // namespace detail

/// D = fB / Z, unquantized.
template <typename Scalar>
Scalar depth_to_disparity(Scalar z, const CameraModel<Scalar>& cam) {
  detail::require_positive(z, "depth");
  return cam.fB() / z;
}

/// Z = fB / D, unquantized.
template <typename Scalar>
Scalar disparity_to_depth(Scalar d, const CameraModel<Scalar>& cam) {
  detail::require_positive(d, "disparity");
  return cam.fB() / d;
}

/// dZ/dD = -Z^2 / (fB): depth error (mm) caused by one pixel of disparity error.
template <typename Scalar>
Scalar depth_sensitivity(Scalar z, const CameraModel<Scalar>& cam) {
  detail::require_positive(z, "depth");
  return -z * z / cam.fB();
}

/// Standard deviation of depth noise, k Z^2.
template <typename Scalar>
Scalar depth_sigma(Scalar z, const NoiseParams<Scalar>& params) {
  detail::require_positive(z, "depth");
  return params.k * z * z;
}

/// Inverse-variance fusion weight 1 / Z^4 (the constant k^2 cancels on normalization).
template <typename Scalar>
Scalar fusion_weight(Scalar z) {
  detail::require_positive(z, "depth");
  const Scalar z2 = z * z;
  return Scalar(1) / (z2 * z2);
}

/// Rounds to the nearest multiple of step, halves away from zero.
template <typename Scalar>
Scalar quantize_to_step(Scalar value, Scalar step) {
  using std::round;
  return round(value / step) * step;
}

/// Sensor output for a true disparity: snap to the disparity grid, convert to
/// depth, snap to the depth grid.
template <typename Scalar>
Scalar quantize_disparity_to_depth(Scalar disparity, const CameraModel<Scalar>& cam) {
  const Scalar dq = quantize_to_step(disparity, cam.disparity_step);
  if (!(dq > Scalar(0))) throw DomainError("disparity rounds to zero; depth beyond sensor range");
  return quantize_to_step(cam.fB() / dq, cam.depth_step);
}

template <typename Scalar>
Scalar quantize_depth(Scalar z, const CameraModel<Scalar>& cam) {
  return quantize_disparity_to_depth(depth_to_disparity(z, cam), cam);
}

/// Straight line through (log Z, log dZ) by ordinary least squares.
struct LogLogFit {
  double slope = 0;
  double intercept = 0;
};

/// Fits log(dz) = slope * log(z) + intercept over pairs with dz > 0.
/// Throws AnalysisError with fewer than two usable pairs.
LogLogFit fit_loglog(std::span<const double> z, std::span<const double> dz);

/// Spacing of the distinct depths a sensor can report, and its power law.
struct ResolutionAnalysis {
  std::vector<double> unique_depths;  // strictly increasing
  std::vector<double> delta_z;        // delta_z[k] = unique_depths[k + 1] - unique_depths[k]
  double slope = 0;
  double intercept = 0;

  friend bool operator==(const ResolutionAnalysis&, const ResolutionAnalysis&) = default;
};

/// Deduplicates and sorts the depths, then fits log dZ_k against log Z_k
/// where dZ_k = Z_{k+1} - Z_k. Non-finite and non-positive values are dropped.
ResolutionAnalysis analyze_depth_resolution(std::span<const double> depths);

/// Pushes every integer-millimetre depth in [z_min, z_max] through the sensor
/// quantizer and analyses the distinct outputs.
ResolutionAnalysis simulate_quantized_depths(double z_min, double z_max, const Camera& cam);

/// Sorted distinct disparities fB/Z over the valid pixels of a depth map.
std::vector<double> unique_disparities(const DepthMap& map, const Camera& cam);

/// Disparity quantization step recovered from a depth map.
///
/// The modal gap between consecutive distinct disparities (gaps binned to
/// 1e-4 px) gives a first estimate s0. Where the depth rounding jitter is
/// below s0/4, levels are numbered by counting steps between neighbours and
/// a line d = c + s k refines it to s1. Each such level then has an absolute
/// index n = round(d / s1), and its reported depth Z confines n s to
/// fB / [Z + h, Z - h] with h half a depth step. The result is the centre of
/// the intersection of those intervals, or s1 if they are inconsistent.
double estimate_subpixel_resolution(const DepthMap& map, const Camera& cam);

/// Number of distinct disparity levels in each unit interval
/// [n - step/2, n + 1 - step/2), keyed by n.
std::map<long, int> audit_disparity_levels(const DepthMap& map, const Camera& cam, double step);

}  // namespace sldepth
