#include "sldepth/geometry.hpp"

#include "sldepth/errors.hpp"
#include "sldepth/noise_model.hpp"

namespace sldepth {

PointCloud backproject(const DepthMap& map, const Camera& cam) { return backproject(map, cam, Pose::identity()); }

PointCloud backproject(const DepthMap& map, const Camera& cam, const Pose& pose) {
  PointCloud cloud;
  const auto n = static_cast<std::size_t>(map.valid_count());
  cloud.points.reserve(n);
  cloud.pixels.reserve(n);
  const Pose to_world = pose.inverse();
  const bool identity = pose.R.isIdentity(0.0) && pose.T.isZero(0.0);
  for (Eigen::Index y = 0; y < map.height(); ++y) {
    for (Eigen::Index x = 0; x < map.width(); ++x) {
      if (!map.is_valid(x, y)) continue;
      Eigen::Vector3d p =
          backproject_pixel(static_cast<double>(x), static_cast<double>(y), map.at(x, y), cam);
      cloud.points.push_back(identity ? p : to_world.apply(p));
      cloud.pixels.emplace_back(static_cast<int>(x), static_cast<int>(y));
    }
  }
  return cloud;
}

Projection project(const Eigen::Vector3d& p, const Pose& pose, const Camera& cam) {
  const Eigen::Vector3d h = pose.projection_matrix(cam) * p.homogeneous();
  if (!(h.z() > 0)) throw ProjectionError("point at or behind the camera plane");
  return {h.head<2>() / h.z(), h.z()};
}

DisparityMap depth_map_to_disparity_map(const DepthMap& map, const Camera& cam) {
  DisparityMap out(map.width(), map.height());
  for (Eigen::Index i = 0; i < map.size(); ++i) {
    if (!map.valid.data()[i]) continue;
    out.values.data()[i] = depth_to_disparity(map.values.data()[i], cam);
    out.valid.data()[i] = true;
  }
  return out;
}

DepthMap disparity_map_to_depth_map(const DisparityMap& map, const Camera& cam) {
  DepthMap out(map.width(), map.height());
  for (Eigen::Index i = 0; i < map.size(); ++i) {
    if (!map.valid.data()[i]) continue;
    out.values.data()[i] = disparity_to_depth(map.values.data()[i], cam);
    out.valid.data()[i] = true;
  }
  return out;
}

}  // namespace sldepth
