#include "sldepth/mesh.hpp"

#include <array>
#include <cmath>
#include <unordered_map>

#include <Eigen/Geometry>

namespace sldepth {
namespace {

// Corner c has offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
// Faces list their corners counter-clockwise seen from outside the cube.
constexpr std::array<std::array<int, 4>, 6> kFaces = {{
    {0, 4, 6, 2},  // -x
    {1, 3, 7, 5},  // +x
    {0, 1, 5, 4},  // -y
    {2, 6, 7, 3},  // +y
    {0, 2, 3, 1},  // -z
    {4, 5, 7, 6},  // +z
}};

// Local edge id for an unordered corner pair (corners differ in one bit).
int edge_id(int a, int b) {
  const int lo = std::min(a, b);
  const int axis = (a ^ b) == 1 ? 0 : (a ^ b) == 2 ? 1 : 2;
  return lo * 3 + axis;  // 0..23, sparse but unique
}

bool inside(double v) { return v < 0; }

}  // namespace

TriangleMesh marching_cubes(const ScalarGrid& grid) {
  TriangleMesh mesh;
  const int nx = grid.dims.x(), ny = grid.dims.y(), nz = grid.dims.z();
  if (nx < 2 || ny < 2 || nz < 2) return mesh;

  std::unordered_map<std::size_t, int> welded;  // global edge key -> vertex index

  std::array<double, 8> val{};
  std::array<int, 24> local_vertex{};
  std::array<int, 24> next{};

  for (int k = 0; k + 1 < nz; ++k) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        bool observed = true;
        int mask = 0;
        for (int c = 0; c < 8; ++c) {
          val[c] = grid.values[grid.index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))];
          if (std::isnan(val[c])) {
            observed = false;
            break;
          }
          if (inside(val[c])) mask |= 1 << c;
        }
        if (!observed || mask == 0 || mask == 0xff) continue;

        local_vertex.fill(-1);
        next.fill(-1);

        auto vertex_on = [&](int a, int b) {
          const int e = edge_id(a, b);
          if (local_vertex[e] >= 0) return local_vertex[e];
          const int lo = std::min(a, b), hi = std::max(a, b);
          const int li = i + (lo & 1), lj = j + ((lo >> 1) & 1), lk = k + ((lo >> 2) & 1);
          const std::size_t key = grid.index(li, lj, lk) * 3 + static_cast<std::size_t>(e % 3);
          auto [it, fresh] = welded.try_emplace(key, static_cast<int>(mesh.vertices.size()));
          if (fresh) {
            const double t = val[lo] / (val[lo] - val[hi]);
            const Eigen::Vector3d p0 = grid.position(li, lj, lk);
            const Eigen::Vector3d p1 =
                grid.position(i + (hi & 1), j + ((hi >> 1) & 1), k + ((hi >> 2) & 1));
            mesh.vertices.push_back(p0 + t * (p1 - p0));
          }
          local_vertex[e] = it->second;
          return it->second;
        };

        // Directed segments run from the edge where the boundary walk leaves
        // the inside region to the edge where it enters it.
        auto link = [&](int from_a, int from_b, int to_a, int to_b) {
          vertex_on(from_a, from_b);
          vertex_on(to_a, to_b);
          next[edge_id(from_a, from_b)] = edge_id(to_a, to_b);
        };

        bool ambiguous_face = false;
        for (const auto& f : kFaces) {
          std::array<int, 4> leave{-1, -1, -1, -1}, enter{-1, -1, -1, -1};
          int crossings = 0;
          for (int s = 0; s < 4; ++s) {
            const bool a = inside(val[f[s]]), b = inside(val[f[(s + 1) % 4]]);
            if (a == b) continue;
            ++crossings;
            (a ? leave : enter)[s] = 1;
          }
          if (crossings == 0) continue;
          if (crossings == 2) {
            int from = -1, to = -1;
            for (int s = 0; s < 4; ++s) {
              if (leave[s] > 0) from = s;
              if (enter[s] > 0) to = s;
            }
            link(f[from], f[(from + 1) % 4], f[to], f[(to + 1) % 4]);
            continue;
          }
          // Ambiguous face: corners 0 and 2 share a sign, 1 and 3 the other.
          ambiguous_face = true;
          const double v0 = val[f[0]], v1 = val[f[1]], v2 = val[f[2]], v3 = val[f[3]];
          const double saddle = (v0 * v2 - v1 * v3) / (v0 + v2 - v1 - v3);
          const bool diagonal02_joined = inside(saddle) == inside(v0);
          // Either cut off corners 1 and 3 (0-2 joined) or corners 0 and 2.
          const int first = diagonal02_joined ? 1 : 0;
          for (int corner : {first, first + 2}) {
            const int in_edge = (corner + 3) % 4;  // edge (corner-1, corner)
            const int out_edge = corner;           // edge (corner, corner+1)
            const int from = leave[in_edge] > 0 ? in_edge : out_edge;
            const int to = from == in_edge ? out_edge : in_edge;
            link(f[from], f[(from + 1) % 4], f[to], f[(to + 1) % 4]);
          }
        }

        std::array<bool, 24> used{};
        for (int start = 0; start < 24; ++start) {
          if (next[start] < 0 || used[start]) continue;
          std::array<int, 12> loop{};
          int n = 0;
          for (int e = start; e >= 0 && !used[e] && n < 12; e = next[e]) {
            used[e] = true;
            loop[n++] = local_vertex[e];
          }
          auto emit = [&](int a, int b, int c) {
            const Eigen::Vector3d& pa = mesh.vertices[a];
            if (0.5 * (mesh.vertices[b] - pa).cross(mesh.vertices[c] - pa).norm() > 1e-12)
              mesh.triangles.emplace_back(a, b, c);
          };
          if (n > 3 && ambiguous_face) {
            // A loop may cross an ambiguous face twice; a fan diagonal between
            // those crossings could be repeated by the neighbouring cube, so
            // fan around a private centre vertex instead.
            Eigen::Vector3d centre = Eigen::Vector3d::Zero();
            for (int t = 0; t < n; ++t) centre += mesh.vertices[loop[t]];
            const int c = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(centre / n);
            for (int t = 0; t < n; ++t) emit(c, loop[t], loop[(t + 1) % n]);
          } else {
            for (int t = 1; t + 1 < n; ++t) emit(loop[0], loop[t], loop[t + 1]);
          }
        }
      }
    }
  }
  return mesh;
}

}  // namespace sldepth
