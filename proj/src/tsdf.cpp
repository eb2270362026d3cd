#include "sldepth/tsdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sldepth/errors.hpp"
#include "sldepth/noise_model.hpp"

namespace sldepth {

TsdfVolume::TsdfVolume(const VolumeParams& params)
    : origin_(params.origin),
      voxel_size_(params.voxel_size),
      dims_(params.dims),
      f_min_(params.f_min.value_or(-4.0 * params.voxel_size)),
      f_max_(params.f_max.value_or(4.0 * params.voxel_size)) {
  if (!(voxel_size_ > 0)) throw ConfigError("voxel size must be positive");
  if ((dims_.array() <= 0).any()) throw ConfigError("volume dimensions must be positive");
  if (!(f_min_ < 0) || !(f_max_ > 0)) throw ConfigError("truncation requires f_min < 0 < f_max");
  const auto n = static_cast<std::size_t>(dims_.x()) * static_cast<std::size_t>(dims_.y()) *
                 static_cast<std::size_t>(dims_.z());
  numerator_.assign(n, 0.0);
  weight_.assign(n, 0.0);
}

std::optional<double> TsdfVolume::normalized(int i, int j, int k) const {
  const auto idx = index(i, j, k);
  if (!(weight_[idx] > 0)) return std::nullopt;
  return numerator_[idx] / weight_[idx];
}

void TsdfVolume::assign(std::vector<double> numerator, std::vector<double> weight) {
  if (numerator.size() != numerator_.size() || weight.size() != weight_.size())
    throw ConfigError("accumulator size does not match the volume");
  numerator_ = std::move(numerator);
  weight_ = std::move(weight);
}

std::size_t TsdfVolume::observed_count() const {
  return static_cast<std::size_t>(std::count_if(weight_.begin(), weight_.end(), [](double w) { return w > 0; }));
}

ScalarGrid TsdfVolume::normalized_grid() const {
  ScalarGrid grid;
  grid.origin = origin_;
  grid.spacing = voxel_size_;
  grid.dims = dims_;
  grid.values.resize(numerator_.size());
  for (std::size_t i = 0; i < numerator_.size(); ++i)
    grid.values[i] = weight_[i] > 0 ? numerator_[i] / weight_[i] : std::numeric_limits<double>::quiet_NaN();
  return grid;
}

void integrate_scan(TsdfVolume& volume, const DepthMap& map, const Pose& pose, const Camera& cam,
                    WeightingMode mode) {
  cam.validate();
  if (!pose.is_rigid()) throw ConfigError("integrate_scan: pose is not a rigid transform");
  const auto& dims = volume.dims();
  const long w = map.width(), h = map.height();
  for (int k = 0; k < dims.z(); ++k) {
    for (int j = 0; j < dims.y(); ++j) {
      for (int i = 0; i < dims.x(); ++i) {
        const Eigen::Vector3d pc = pose.apply(volume.center(i, j, k));
        if (!(pc.z() > 0)) continue;
        const long x = std::lround(cam.f * pc.x() / pc.z() + cam.u);
        const long y = std::lround(cam.f * pc.y() / pc.z() + cam.v);
        if (x < 0 || y < 0 || x >= w || y >= h || !map.is_valid(x, y)) continue;
        const double zi = map.at(x, y);
        const Eigen::Vector3d pi = backproject_pixel(static_cast<double>(x), static_cast<double>(y), zi, cam);
        const double f = std::clamp(pc.norm() - pi.norm(), volume.f_min(), volume.f_max());
        const double weight = mode == WeightingMode::uniform ? 1.0 : fusion_weight(zi);
        volume.accumulate(volume.index(i, j, k), f, weight);
      }
    }
  }
}

TriangleMesh extract_mesh(const TsdfVolume& volume) { return marching_cubes(volume.normalized_grid()); }

VolumeParams bounds_for_scans(std::span<const Scan> scans, const Camera& cam, double voxel_size,
                              int padding_voxels) {
  if (scans.empty()) throw ConfigError("no scans");
  if (!(voxel_size > 0)) throw ConfigError("voxel size must be positive");
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& scan : scans) {
    for (const auto& p : backproject(scan.depth, cam, scan.pose).points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  if (!lo.allFinite()) throw ConfigError("scans contain no valid depth");
  const double pad = padding_voxels * voxel_size;
  VolumeParams params;
  params.voxel_size = voxel_size;
  params.origin = lo - Eigen::Vector3d::Constant(pad);
  const Eigen::Vector3d extent = (hi - lo).array() + 2 * pad;
  params.dims = (extent / voxel_size).array().ceil().cast<int>() + 1;
  return params;
}

TsdfVolume fuse_volume(std::span<const Scan> scans, const Camera& cam, const VolumeParams& params,
                       WeightingMode mode) {
  if (scans.empty()) throw ConfigError("fuse: no scans");
  TsdfVolume volume(params);
  for (const auto& scan : scans) integrate_scan(volume, scan.depth, scan.pose, cam, mode);
  return volume;
}

TriangleMesh fuse(std::span<const Scan> scans, const Camera& cam, const VolumeParams& params, WeightingMode mode) {
  return extract_mesh(fuse_volume(scans, cam, params, mode));
}

}  // namespace sldepth
