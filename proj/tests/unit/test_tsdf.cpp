#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Geometry>

#include "oracles.hpp"
#include "property.hpp"
#include "scenes.hpp"
#include "sldepth/errors.hpp"
#include "sldepth/noise_model.hpp"
#include "sldepth/synth.hpp"
#include "sldepth/tsdf.hpp"

using namespace sldepth;
using namespace sldepth::test;

namespace {

const Camera kinect;

// 3 x 3 x 25 column of 1 mm voxels on the optical axis around z = 1000.
VolumeParams axial_column() {
  VolumeParams p;
  p.voxel_size = 1;
  p.origin = {-1, -1, 988};
  p.dims = {3, 3, 25};
  return p;
}

DepthMap constant_map(double z) { return DepthMap::constant(640, 480, z); }

double rms(const std::vector<double>& e) {
  double s = 0;
  for (double v : e) s += v * v;
  return e.empty() ? 0 : std::sqrt(s / static_cast<double>(e.size()));
}

double mesh_rms_to_plane(const TriangleMesh& m, const Eigen::Vector3d& abc) {
  std::vector<double> e;
  for (const auto& v : m.vertices) e.push_back(plane_distance(abc, v));
  return rms(e);
}

TEST(Volume, RejectsBadParameters) {
  VolumeParams p;
  p.dims = {2, 2, 2};
  p.voxel_size = 0;
  EXPECT_THROW(TsdfVolume{p}, ConfigError);
  p.voxel_size = 1;
  p.dims = {0, 2, 2};
  EXPECT_THROW(TsdfVolume{p}, ConfigError);
  p.dims = {2, 2, 2};
  p.f_min = 1;
  EXPECT_THROW(TsdfVolume{p}, ConfigError);
  p.f_min.reset();
  TsdfVolume v(p);
  EXPECT_EQ(v.f_min(), -4.0);
  EXPECT_EQ(v.f_max(), 4.0);
  EXPECT_EQ(v.observed_count(), 0u);
  EXPECT_FALSE(v.normalized(0, 0, 0).has_value());
}

TEST(Integrate, SignedDistanceOnAxis) {
  TsdfVolume v(axial_column());
  integrate_scan(v, constant_map(1000), Pose::identity(), kinect, WeightingMode::uniform);
  EXPECT_NEAR(*v.normalized(1, 1, 12), 0.0, 0.5);  // centre z = 1000
  EXPECT_NEAR(*v.normalized(1, 1, 9), -3.0, 0.5);  // 3 mm on the camera side
  EXPECT_NEAR(*v.normalized(1, 1, 15), 3.0, 0.5);
  EXPECT_EQ(*v.normalized(1, 1, 0), v.f_min());
  EXPECT_EQ(*v.normalized(1, 1, 24), v.f_max());
}

TEST(Integrate, RadialDistance) {
  // Off-axis voxel: distance along the line of sight, not along Z.
  VolumeParams p;
  p.voxel_size = 1;
  p.dims = {1, 1, 1};
  p.origin = {400, 0, 996};
  p.f_min = -50;
  p.f_max = 50;
  TsdfVolume v(p);
  integrate_scan(v, constant_map(1000), Pose::identity(), kinect, WeightingMode::uniform);
  const double px = std::round(kF * 400 / 996 + kU), py = std::round(kV);
  const Eigen::Vector3d pi((px - kU) * 1000 / kF, (py - kV) * 1000 / kF, 1000);
  EXPECT_NEAR(*v.normalized(0, 0, 0), Eigen::Vector3d(400, 0, 996).norm() - pi.norm(), 1e-9);
}

TEST(Integrate, UntouchedOutsideImageOrInvalid) {
  VolumeParams p;
  p.voxel_size = 10;
  p.dims = {3, 1, 1};
  p.origin = {-5000, 0, 1000};  // far outside the field of view
  TsdfVolume v(p);
  integrate_scan(v, constant_map(1000), Pose::identity(), kinect, WeightingMode::uniform);
  EXPECT_EQ(v.observed_count(), 0u);
  TsdfVolume col(axial_column());
  integrate_scan(col, DepthMap(640, 480), Pose::identity(), kinect, WeightingMode::uniform);
  EXPECT_EQ(col.observed_count(), 0u);
  EXPECT_THROW(integrate_scan(col, constant_map(1000), Pose{2 * Eigen::Matrix3d::Identity(), {}}, kinect,
                              WeightingMode::uniform),
               ConfigError);
}

TEST(Integrate, QuarticWeightRatio) {
  VolumeParams p = axial_column();
  TsdfVolume near(p), far(p);
  Pose back;
  back.T = {0, 0, 900};
  integrate_scan(near, constant_map(1000), Pose::identity(), kinect, WeightingMode::inverse_quartic);
  integrate_scan(far, constant_map(1900), back, kinect, WeightingMode::inverse_quartic);
  const auto i = near.index(1, 1, 12);
  EXPECT_NEAR(near.weight()[i] / far.weight()[i], std::pow(1900.0 / 1000.0, 4), 1e-9);

  TsdfVolume a(p), b(p);
  integrate_scan(a, constant_map(600), Pose::identity(), kinect, WeightingMode::inverse_quartic);
  integrate_scan(b, constant_map(1500), Pose{Eigen::Matrix3d::Identity(), {0, 0, 900}}, kinect,
                 WeightingMode::inverse_quartic);
  EXPECT_NEAR(a.weight()[i] / b.weight()[i], std::pow(1500.0 / 600.0, 4), 1e-9);
  EXPECT_NEAR(a.weight()[i] / b.weight()[i], 39.0625, 1e-9);
}

TEST(Integrate, ClampedNormalizedValues) {
  for_all(5, 51, [](Gen& g, int c) {
    VolumeParams p;
    p.voxel_size = 8;
    p.origin = {-100, -80, 700};
    p.dims = {26, 21, 30};
    TsdfVolume v(p);
    for (int s = 0; s < 3; ++s) {
      SceneSpec spec;
      spec.surfaces = {SphereSurface{{g.uniform(-40, 40), g.uniform(-40, 40), 900}, g.uniform(60, 120), std::nullopt}};
      spec.quantize = true;
      spec.disparity_noise = 0.2;
      spec.seed = static_cast<std::uint64_t>(c * 10 + s);
      integrate_scan(v, synth_scene(spec, kinect).depth, spec.pose, kinect,
                     g.coin() ? WeightingMode::uniform : WeightingMode::inverse_quartic);
    }
    ASSERT_GT(v.observed_count(), 0u);
    for (int k = 0; k < 30; ++k)
      for (int j = 0; j < 21; ++j)
        for (int i = 0; i < 26; ++i) {
          EXPECT_GE(v.weight()[v.index(i, j, k)], 0.0);
          if (const auto f = v.normalized(i, j, k)) {
            EXPECT_GE(*f, v.f_min() - 1e-12) << case_name(51, c);
            EXPECT_LE(*f, v.f_max() + 1e-12) << case_name(51, c);
          }
        }
  });
}

TEST(Integrate, OrderInvariance) {
  const ReliefPair r = relief_pair(3);
  std::vector<Scan> scans = r.scans;
  SceneSpec side;
  side.surfaces = r.surfaces;
  side.pose = Pose::from_center(Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitY()).toRotationMatrix(), {-150, 0, -100});
  side.quantize = true;
  scans.push_back({synth_scene(side, kinect).depth, side.pose});
  std::vector<int> order = {0, 1, 2};
  const TsdfVolume ref = fuse_volume(scans, kinect, r.volume, WeightingMode::inverse_quartic);
  while (std::next_permutation(order.begin(), order.end())) {
    TsdfVolume v(r.volume);
    for (int i : order) integrate_scan(v, scans[i].depth, scans[i].pose, kinect, WeightingMode::inverse_quartic);
    for (std::size_t i = 0; i < v.voxel_count(); ++i) {
      EXPECT_NEAR(v.weight()[i], ref.weight()[i], 1e-6 * std::abs(ref.weight()[i]));
      EXPECT_NEAR(v.numerator()[i], ref.numerator()[i], 1e-6 * std::abs(ref.weight()[i]) * 16);
    }
  }
}

TEST(Extract, EmptyVolume) {
  TsdfVolume v(axial_column());
  EXPECT_TRUE(extract_mesh(v).empty());
}

TEST(Extract, FrontoParallelPlane) {
  VolumeParams p;
  p.voxel_size = 4;
  p.origin = {-100, -100, 960};
  p.dims = {51, 51, 21};
  const Scan scan{constant_map(1000), Pose::identity()};
  const TriangleMesh m = fuse(std::span(&scan, 1), kinect, p, WeightingMode::uniform);
  ASSERT_FALSE(m.empty());
  for (const auto& v : m.vertices) EXPECT_NEAR(v.z(), 1000, p.voxel_size / 2);
}

TEST(Extract, Sphere) {
  SceneSpec spec;
  spec.surfaces = {SphereSurface{{0, 0, 1200}, 200, std::nullopt}};
  VolumeParams p;
  p.voxel_size = 4;
  p.origin = {-220, -220, 980};
  p.dims = {111, 111, 70};
  const Scan scan{synth_scene(spec, kinect).depth, Pose::identity()};
  const TriangleMesh m = fuse(std::span(&scan, 1), kinect, p, WeightingMode::inverse_quartic);
  ASSERT_GT(m.vertices.size(), 1000u);
  std::vector<double> e;
  for (const auto& v : m.vertices) e.push_back((v - Eigen::Vector3d(0, 0, 1200)).norm() - 200);
  EXPECT_LT(rms(e), p.voxel_size);
}

TEST(Fuse, SingleScanReproducesSurface) {
  for_all(4, 52, [](Gen& g, int c) {
    const Eigen::Vector3d n = Eigen::Vector3d(g.uniform(-0.3, 0.3), g.uniform(-0.3, 0.3), -1).normalized();
    SceneSpec spec;
    spec.surfaces = {PlaneSurface{plane_coefficients({0, 0, g.uniform(800, 1200)}, n), std::nullopt}};
    const Scan scan{synth_scene(spec, kinect).depth, Pose::identity()};
    VolumeParams p = bounds_for_scans(std::span(&scan, 1), kinect, 8);
    p.origin.head<2>() = Eigen::Vector2d(-200, -200);
    p.dims.head<2>() = Eigen::Vector2i(51, 51);
    const TriangleMesh m = fuse(std::span(&scan, 1), kinect, p, WeightingMode::uniform);
    ASSERT_FALSE(m.empty());
    for (const auto& v : m.vertices)
      EXPECT_LT(plane_distance(std::get<PlaneSurface>(spec.surfaces[0]).coefficients, v), p.voxel_size / 2)
          << case_name(52, c);
  });
}

TEST(Fuse, WeightedMeanZeroCrossing) {
  // The same plane observed at 602 mm by a near camera and at 592 mm by a
  // camera 900 mm further back.
  const double z1 = 602, z2_cam = 1492, z2 = z2_cam - 900;
  const std::vector<Scan> scans = {{constant_map(z1), Pose::identity()},
                                   {constant_map(z2_cam), Pose{Eigen::Matrix3d::Identity(), {0, 0, 900}}}};
  VolumeParams p;
  p.voxel_size = 4;
  p.origin = {-60, -60, 560};
  p.dims = {31, 31, 21};
  const double w1 = 1 / std::pow(z1, 4), w2 = 1 / std::pow(z2_cam, 4);
  const double expected = (w1 * z1 + w2 * z2) / (w1 + w2);
  const TriangleMesh quartic = fuse(scans, kinect, p, WeightingMode::inverse_quartic);
  const TriangleMesh uniform = fuse(scans, kinect, p, WeightingMode::uniform);
  ASSERT_FALSE(quartic.empty());
  for (const auto& v : quartic.vertices) EXPECT_NEAR(v.z(), expected, p.voxel_size / 4);
  for (const auto& v : uniform.vertices) EXPECT_NEAR(v.z(), (z1 + z2) / 2, p.voxel_size / 4);
}

TEST(Fuse, ModesAgreeAtEqualDepths) {
  // Every scan sees the fronto-parallel plane at 1000 mm.
  std::vector<Scan> scans;
  for (double dx : {-30.0, 0.0, 40.0}) {
    SceneSpec spec;
    spec.surfaces = {PlaneSurface{{0, 0, -0.001}, std::nullopt}};
    spec.pose.T = {dx, 0, 0};
    scans.push_back({synth_scene(spec, kinect).depth, spec.pose});
  }
  VolumeParams p;
  p.voxel_size = 5;
  p.origin = {-100, -100, 970};
  p.dims = {41, 41, 13};
  const TsdfVolume a = fuse_volume(scans, kinect, p, WeightingMode::uniform);
  const TsdfVolume b = fuse_volume(scans, kinect, p, WeightingMode::inverse_quartic);
  for (int k = 0; k < 13; ++k)
    for (int j = 0; j < 41; ++j)
      for (int i = 0; i < 41; ++i) {
        const auto fa = a.normalized(i, j, k), fb = b.normalized(i, j, k);
        ASSERT_EQ(fa.has_value(), fb.has_value());
        if (fa) EXPECT_NEAR(*fa, *fb, 1e-12 * std::max(1.0, std::abs(*fa)));
      }
}

TEST(Fuse, ReliefQuarticBeatsUniform) {
  const ReliefPair r = relief_pair(11);
  const TriangleMesh q = fuse(r.scans, kinect, r.volume, WeightingMode::inverse_quartic);
  const TriangleMesh u = fuse(r.scans, kinect, r.volume, WeightingMode::uniform);
  auto err = [&](const TriangleMesh& m) {
    std::vector<double> e;
    for (const auto& v : m.vertices) e.push_back(v.z() - (600 - 5 * std::sin(2 * std::numbers::pi * v.x() / 40)));
    return rms(e);
  };
  EXPECT_LT(err(q), err(u)) << err(q) << " vs " << err(u);
}

TEST(Fuse, MoreScansLowerError) {
  // K noisy scans of a tilted plane from cameras at ~1000 mm.
  const Eigen::Vector3d abc = plane_coefficients({0, 0, 1000}, Eigen::Vector3d(0.2, -0.1, -1).normalized());
  std::vector<Scan> scans;
  Gen g(53);
  for (int s = 0; s < 5; ++s) {
    SceneSpec spec;
    spec.surfaces = {PlaneSurface{abc, std::nullopt}};
    spec.pose = Pose::from_center(Eigen::AngleAxisd(g.uniform(-0.05, 0.05), g.unit_vector()).toRotationMatrix(),
                                  {g.uniform(-30, 30), g.uniform(-30, 30), g.uniform(-30, 30)});
    spec.quantize = true;
    spec.disparity_noise = 0.1;
    spec.seed = 500 + s;
    scans.push_back({synth_scene(spec, kinect).depth, spec.pose});
  }
  VolumeParams p;
  p.voxel_size = 4;
  p.origin = {-150, -150, 900};
  p.dims = {76, 76, 51};
  std::vector<double> errors;
  for (int k = 1; k <= 5; ++k) {
    const TriangleMesh m = fuse(std::span(scans.data(), k), kinect, p, WeightingMode::inverse_quartic);
    errors.push_back(mesh_rms_to_plane(m, abc));
  }
  for (int k = 1; k < 5; ++k) EXPECT_LE(errors[k], errors[k - 1] * 1.1) << "K=" << k + 1;
  EXPECT_LT(errors[4], errors[0]);
}

TEST(Bounds, CoverAllPoints) {
  const ReliefPair r = relief_pair(2);
  const VolumeParams p = bounds_for_scans(r.scans, kinect, 5, 2);
  EXPECT_LE(p.origin.z(), 595 - 10);
  EXPECT_GE(p.origin.z() + 5 * (p.dims.z() - 1), 605 + 10);
  EXPECT_THROW(bounds_for_scans({}, kinect, 5), ConfigError);
}

}  // namespace
