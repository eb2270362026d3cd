#pragma once

#include <vector>

#include <Eigen/Core>

namespace sldepth {

struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3i> triangles;

  bool empty() const { return triangles.empty(); }
};

/// Regular grid of samples; NaN marks an unobserved sample.
struct ScalarGrid {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();  // position of sample (0, 0, 0)
  double spacing = 1;
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  std::vector<double> values;  // x fastest, then y, then z

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(dims.y()) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(dims.x()) +
           static_cast<std::size_t>(i);
  }
  Eigen::Vector3d position(int i, int j, int k) const { return origin + spacing * Eigen::Vector3d(i, j, k); }
};

/// Zero iso-surface of the grid by marching cubes.
///
/// Each cube's polygon is traced face by face: a face with two edge
/// crossings contributes one segment, a face with four crossings is resolved
/// by the asymptotic decider (bilinear saddle value), so neighbouring cubes
/// agree on every shared face and the surface has no cracks. Closed loops
/// are fanned into triangles; vertices on shared grid edges are welded.
/// Cubes with any unobserved corner are skipped. Triangles are wound so
/// their normals point towards negative values.
TriangleMesh marching_cubes(const ScalarGrid& grid);

}  // namespace sldepth
