#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "sldepth/camera.hpp"
#include "sldepth/raster.hpp"

namespace sldepth {

/// Rigid world-to-camera transform: P_cam = R * P_world + T.
template <typename Scalar>
struct RigidPose {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Matrix3 R = Matrix3::Identity();
  Vector3 T = Vector3::Zero();

  static RigidPose identity() { return {}; }

  /// Pose of a camera centred at `center` (world) with world-to-camera rotation R.
  static RigidPose from_center(const Matrix3& R, const Vector3& center) { return {R, -R * center}; }

  Vector3 apply(const Vector3& p) const { return R * p + T; }
  Vector3 center() const { return -R.transpose() * T; }
  RigidPose inverse() const { return {R.transpose(), -R.transpose() * T}; }

  /// M = K [R | T].
  Eigen::Matrix<Scalar, 3, 4> projection_matrix(const CameraModel<Scalar>& cam) const {
    Eigen::Matrix<Scalar, 3, 4> Rt;
    Rt << R, T;
    return cam.intrinsics() * Rt;
  }

  bool is_rigid(Scalar tol = Scalar(1e-9)) const {
    return (R.transpose() * R - Matrix3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(R.determinant() - Scalar(1)) <= tol && T.allFinite();
  }
};

using Pose = RigidPose<double>;

/// Back-projected pixels; `pixels[i]` is the source of `points[i]` when present.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector2i> pixels;

  std::size_t size() const { return points.size(); }
};

/// Camera-frame point ((x - u) Z / f, (y - v) Z / f, Z).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> backproject_pixel(Scalar x, Scalar y, Scalar z, const CameraModel<Scalar>& cam) {
  return {(x - cam.u) * z / cam.f, (y - cam.v) * z / cam.f, z};
}

/// One point per valid pixel, in the camera frame of the map.
PointCloud backproject(const DepthMap& map, const Camera& cam);

/// Same, expressed in the world frame of `pose`.
PointCloud backproject(const DepthMap& map, const Camera& cam, const Pose& pose);

struct Projection {
  Eigen::Vector2d pixel;
  double depth = 0;  // camera-frame Z
};

/// Perspective projection of a world point through M = K [R | T].
/// Throws ProjectionError when the camera-frame depth is not positive.
Projection project(const Eigen::Vector3d& p, const Pose& pose, const Camera& cam);

DisparityMap depth_map_to_disparity_map(const DepthMap& map, const Camera& cam);
DepthMap disparity_map_to_depth_map(const DisparityMap& map, const Camera& cam);

}  // namespace sldepth
