#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "sldepth/camera.hpp"
#include "sldepth/geometry.hpp"
#include "sldepth/raster.hpp"

namespace sldepth {

/// Axis-aligned world-space clip box for a surface.
struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Constant(-1e30);
  Eigen::Vector3d max = Eigen::Vector3d::Constant(1e30);

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// Plane aX + bY + cZ + 1 = 0 in the world frame.
struct PlaneSurface {
  Eigen::Vector3d coefficients;
  std::optional<Aabb> bounds;
};

struct SphereSurface {
  Eigen::Vector3d center;
  double radius = 0;
  std::optional<Aabb> bounds;
};

/// Plane through `point` displaced along `normal` by amplitude * sin(2 pi s / wavelength),
/// s being the in-plane coordinate along `direction`.
struct ReliefSurface {
  Eigen::Vector3d point;
  Eigen::Vector3d normal;
  Eigen::Vector3d direction;
  double amplitude = 0;
  double wavelength = 1;
  std::optional<Aabb> bounds;

  /// n.(p - o) - amplitude * sin(...): zero on the surface.
  double offset(const Eigen::Vector3d& p) const;
};

using Surface = std::variant<PlaneSurface, SphereSurface, ReliefSurface>;

/// Coefficients (a, b, c) of the plane through `point` with normal `normal`.
/// Throws GenerationError for planes through the origin.
Eigen::Vector3d plane_through(const Eigen::Vector3d& point, const Eigen::Vector3d& normal);

/// First intersection of the ray origin + t * dir (t > 0) with the surface.
/// Planes are solved in closed form; spheres and reliefs by bisection to 1e-3 in t.
std::optional<double> intersect(const Surface& surface, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir);

/// Distance from p to the surface (exact for planes and spheres, first order for reliefs).
double surface_distance(const Surface& surface, const Eigen::Vector3d& p);

struct SceneSpec {
  std::vector<Surface> surfaces;
  Pose pose;  // world -> camera
  int width = 640;
  int height = 480;
  bool quantize = false;
  /// Gaussian disparity noise (px std) added before quantization.
  double disparity_noise = 0;
  std::uint64_t seed = 0;
};

struct SyntheticFrame {
  DepthMap depth;      // sensor output
  DepthMap truth;      // exact ray-cast depth
  LabelImage labels;   // index of the surface hit, kNoLabel for misses
};

/// Ray casts every pixel and records the nearest hit. With quantize set the
/// true depth goes through the sensor quantizer of the camera model.
SyntheticFrame synth_scene(const SceneSpec& spec, const Camera& cam);

}  // namespace sldepth
