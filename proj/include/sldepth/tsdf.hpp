#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sldepth/camera.hpp"
#include "sldepth/geometry.hpp"
#include "sldepth/mesh.hpp"
#include "sldepth/raster.hpp"

namespace sldepth {

enum class WeightingMode {
  uniform,          // w = 1
  inverse_quartic,  // w = 1 / Z^4
};

struct VolumeParams {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();  // centre of voxel (0, 0, 0), mm
  double voxel_size = 4;
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  /// Truncation band; defaults to -/+ 4 voxels.
  std::optional<double> f_min;
  std::optional<double> f_max;
};

/// Accumulated truncated signed distance field.
///
/// Each voxel stores the weighted numerator F = sum w_i f_i and the weight
/// sum W = sum w_i separately; F / W is only formed on extraction. Voxels
/// with W = 0 are unobserved.
class TsdfVolume {
 public:
  explicit TsdfVolume(const VolumeParams& params);

  const Eigen::Vector3d& origin() const { return origin_; }
  double voxel_size() const { return voxel_size_; }
  const Eigen::Vector3i& dims() const { return dims_; }
  double f_min() const { return f_min_; }
  double f_max() const { return f_max_; }
  std::size_t voxel_count() const { return numerator_.size(); }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(dims_.y()) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(dims_.x()) +
           static_cast<std::size_t>(i);
  }
  Eigen::Vector3d center(int i, int j, int k) const { return origin_ + voxel_size_ * Eigen::Vector3d(i, j, k); }

  std::span<const double> numerator() const { return numerator_; }
  std::span<const double> weight() const { return weight_; }

  /// F / W, or nullopt for an unobserved voxel.
  std::optional<double> normalized(int i, int j, int k) const;

  /// Adds w * f (f already truncated) to voxel `idx`.
  void accumulate(std::size_t idx, double f, double w) {
    numerator_[idx] += w * f;
    weight_[idx] += w;
  }

  /// Replaces both accumulators, e.g. with a loaded dump. Sizes must match.
  void assign(std::vector<double> numerator, std::vector<double> weight);

  std::size_t observed_count() const;

  /// Normalized field with NaN at unobserved voxels.
  ScalarGrid normalized_grid() const;

 private:
  Eigen::Vector3d origin_;
  double voxel_size_;
  Eigen::Vector3i dims_;
  double f_min_;
  double f_max_;
  std::vector<double> numerator_;
  std::vector<double> weight_;
};

/// Fuses one registered depth map into the volume.
///
/// Every voxel centre P is moved into the camera frame and projected; the
/// nearest pixel supplies the observed surface point P_i. The radial signed
/// distance |R P + T| - |P_i| (negative on the camera side) is clamped to
/// [f_min, f_max] and accumulated with weight 1 or 1 / Z_i^4. Voxels that
/// project outside the image or onto invalid pixels are left untouched.
void integrate_scan(TsdfVolume& volume, const DepthMap& map, const Pose& pose, const Camera& cam,
                    WeightingMode mode);

/// Marching cubes on F / W; cubes touching unobserved voxels are skipped.
TriangleMesh extract_mesh(const TsdfVolume& volume);

struct Scan {
  DepthMap depth;
  Pose pose;
};

/// Volume covering every back-projected point of the scans, padded by
/// `padding_voxels` on each side.
VolumeParams bounds_for_scans(std::span<const Scan> scans, const Camera& cam, double voxel_size,
                              int padding_voxels = 6);

TsdfVolume fuse_volume(std::span<const Scan> scans, const Camera& cam, const VolumeParams& params,
                       WeightingMode mode);

/// Fresh volume, all scans integrated, mesh extracted.
TriangleMesh fuse(std::span<const Scan> scans, const Camera& cam, const VolumeParams& params, WeightingMode mode);

}  // namespace sldepth
