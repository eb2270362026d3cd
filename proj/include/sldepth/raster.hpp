#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace sldepth {

/// Row-major 2D grid indexed (row = y, col = x).
template <typename T>
using Raster = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Scalar raster with a validity mask. Invalid pixels hold 0 and are
/// ignored by every statistic and filter. The tag keeps depth and disparity
/// rasters from being mixed up at compile time.
template <typename Scalar, typename Tag>
struct MaskedRaster {
  Raster<Scalar> values;
  Raster<bool> valid;

  MaskedRaster() = default;
  MaskedRaster(Eigen::Index width, Eigen::Index height)
      : values(Raster<Scalar>::Zero(height, width)), valid(Raster<bool>::Constant(height, width, false)) {}

  static MaskedRaster constant(Eigen::Index width, Eigen::Index height, Scalar value) {
    MaskedRaster m(width, height);
    m.values.setConstant(value);
    m.valid.setConstant(true);
    return m;
  }

  Eigen::Index width() const { return values.cols(); }
  Eigen::Index height() const { return values.rows(); }
  Eigen::Index size() const { return values.size(); }

  bool is_valid(Eigen::Index x, Eigen::Index y) const { return valid(y, x); }
  Scalar at(Eigen::Index x, Eigen::Index y) const { return values(y, x); }

  void set(Eigen::Index x, Eigen::Index y, Scalar value) {
    values(y, x) = value;
    valid(y, x) = true;
  }
  void invalidate(Eigen::Index x, Eigen::Index y) {
    values(y, x) = Scalar(0);
    valid(y, x) = false;
  }

  Eigen::Index valid_count() const { return valid.count(); }

  std::vector<Scalar> valid_values() const {
    std::vector<Scalar> out;
    out.reserve(static_cast<std::size_t>(valid_count()));
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (valid.data()[i]) out.push_back(values.data()[i]);
    return out;
  }

  bool same_shape(const MaskedRaster& other) const {
    return width() == other.width() && height() == other.height();
  }

  friend bool operator==(const MaskedRaster& a, const MaskedRaster& b) {
    return a.same_shape(b) && (a.valid == b.valid).all() && (a.values == b.values).all();
  }
};

struct DepthTag {};
struct DisparityTag {};

/// Depth Z(x, y) in millimetres.
using DepthMap = MaskedRaster<double, DepthTag>;
/// Disparity D(x, y) in pixels.
using DisparityMap = MaskedRaster<double, DisparityTag>;

/// Per-pixel surface or plane index; kNoLabel where nothing was assigned.
using LabelImage = Raster<std::int32_t>;
inline constexpr std::int32_t kNoLabel = -1;

}  // namespace sldepth
