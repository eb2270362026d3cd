#include "sldepth/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "sldepth/errors.hpp"
#include "sldepth/noise_model.hpp"

namespace sldepth {
namespace {

constexpr double kBisectionTol = 1e-3;
constexpr int kMarchSteps = 64;

template <typename G>
double bisect(G&& g, double lo, double hi) {
  double glo = g(lo);
  while (hi - lo > kBisectionTol) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool within(const std::optional<Aabb>& bounds, const Eigen::Vector3d& p) { return !bounds || bounds->contains(p); }

std::optional<double> hit_plane(const PlaneSurface& s, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const Eigen::Vector3d& n = s.coefficients;
  if (!(n.norm() > 0)) throw GenerationError("plane at infinity (zero coefficients)");
  const double num = 1.0 + n.dot(o);
  if (std::abs(num) <= 1e-12 * (1.0 + std::abs(n.dot(o)))) throw GenerationError("plane passes through the camera centre");
  const double den = n.dot(d);
  if (den == 0) return std::nullopt;
  const double t = -num / den;
  if (!(t > 0) || !within(s.bounds, o + t * d)) return std::nullopt;
  return t;
}

std::optional<double> hit_sphere(const SphereSurface& s, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  if (!(s.radius > 0)) throw GenerationError("sphere radius must be positive");
  const double dn2 = d.squaredNorm();
  const double tc = (s.center - o).dot(d) / dn2;
  const double dist2 = (o + tc * d - s.center).squaredNorm();
  if (dist2 >= s.radius * s.radius) return std::nullopt;
  const double lo = tc - s.radius / std::sqrt(dn2);
  if (!(lo > 0)) return std::nullopt;  // camera inside or sphere behind
  auto g = [&](double t) { return (o + t * d - s.center).norm() - s.radius; };
  const double t = bisect(g, lo, tc);
  if (!within(s.bounds, o + t * d)) return std::nullopt;
  return t;
}

std::optional<double> hit_relief(const ReliefSurface& s, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const Eigen::Vector3d n = s.normal.normalized();
  const double s0 = n.dot(o - s.point);
  const double s1 = n.dot(d);
  if (std::abs(s1) < 1e-12) return std::nullopt;
  const double A = std::abs(s.amplitude);
  double t0 = (A - s0) / s1;
  double t1 = (-A - s0) / s1;
  if (t0 > t1) std::swap(t0, t1);
  if (!(t1 > 0)) return std::nullopt;
  t0 = std::max(t0, 1e-9);
  auto g = [&](double t) { return s.offset(o + t * d); };
  if (A == 0) {
    const double t = -s0 / s1;
    if (!(t > 0) || !within(s.bounds, o + t * d)) return std::nullopt;
    return t;
  }
  double prev_t = t0;
  double prev_g = g(t0);
  for (int i = 1; i <= kMarchSteps; ++i) {
    const double t = t0 + (t1 - t0) * i / kMarchSteps;
    const double gt = g(t);
    if (prev_g == 0 || (gt < 0) != (prev_g < 0)) {
      const double hit = prev_g == 0 ? prev_t : bisect(g, prev_t, t);
      if (!within(s.bounds, o + hit * d)) return std::nullopt;
      return hit;
    }
    prev_t = t;
    prev_g = gt;
  }
  return std::nullopt;
}

void validate_relief(const ReliefSurface& s) {
  if (!(s.normal.norm() > 0)) throw GenerationError("relief normal must be non-zero");
  const Eigen::Vector3d n = s.normal.normalized();
  if (!((s.direction - s.direction.dot(n) * n).norm() > 1e-12))
    throw GenerationError("relief direction must not be parallel to its normal");
  if (!(s.wavelength > 0)) throw GenerationError("relief wavelength must be positive");
}

}  // namespace

double ReliefSurface::offset(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d n = normal.normalized();
  const Eigen::Vector3d e = (direction - direction.dot(n) * n).normalized();
  const Eigen::Vector3d r = p - point;
  return n.dot(r) - amplitude * std::sin(2.0 * std::numbers::pi * e.dot(r) / wavelength);
}

Eigen::Vector3d plane_through(const Eigen::Vector3d& point, const Eigen::Vector3d& normal) {
  const double k = normal.dot(point);
  if (std::abs(k) <= 1e-12 * normal.norm() * (1.0 + point.norm()))
    throw GenerationError("plane passes through the origin");
  return -normal / k;
}

std::optional<double> intersect(const Surface& surface, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  return std::visit(
      [&](const auto& s) -> std::optional<double> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, PlaneSurface>) return hit_plane(s, origin, dir);
        if constexpr (std::is_same_v<S, SphereSurface>) return hit_sphere(s, origin, dir);
        if constexpr (std::is_same_v<S, ReliefSurface>) return hit_relief(s, origin, dir);
      },
      surface);
}

double surface_distance(const Surface& surface, const Eigen::Vector3d& p) {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, PlaneSurface>)
          return std::abs(s.coefficients.dot(p) + 1.0) / s.coefficients.norm();
        if constexpr (std::is_same_v<S, SphereSurface>) return std::abs((p - s.center).norm() - s.radius);
        if constexpr (std::is_same_v<S, ReliefSurface>) {
          // |g| / |grad g| with the gradient evaluated at p.
          const Eigen::Vector3d n = s.normal.normalized();
          const Eigen::Vector3d e = (s.direction - s.direction.dot(n) * n).normalized();
          const double w = 2.0 * std::numbers::pi / s.wavelength;
          const double slope = s.amplitude * w * std::cos(w * e.dot(p - s.point));
          return std::abs(s.offset(p)) / std::sqrt(1.0 + slope * slope);
        }
      },
      surface);
}

SyntheticFrame synth_scene(const SceneSpec& spec, const Camera& cam) {
  cam.validate();
  if (spec.surfaces.empty()) throw GenerationError("scene has no surfaces");
  if (spec.width <= 0 || spec.height <= 0) throw GenerationError("image size must be positive");
  if (!spec.pose.is_rigid()) throw GenerationError("scene pose is not a rigid transform");
  if (spec.disparity_noise < 0) throw GenerationError("disparity noise must be non-negative");
  for (const auto& s : spec.surfaces)
    if (const auto* relief = std::get_if<ReliefSurface>(&s)) validate_relief(*relief);

  SyntheticFrame frame{DepthMap(spec.width, spec.height), DepthMap(spec.width, spec.height),
                       LabelImage::Constant(spec.height, spec.width, kNoLabel)};
  const Eigen::Matrix3d Rt = spec.pose.R.transpose();
  const Eigen::Vector3d origin = spec.pose.center();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.disparity_noise > 0 ? spec.disparity_noise : 1.0);

  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      // Camera ray with unit z, so the ray parameter is the camera-frame depth.
      const Eigen::Vector3d ray_cam((x - cam.u) / cam.f, (y - cam.v) / cam.f, 1.0);
      const Eigen::Vector3d dir = Rt * ray_cam;
      double best = std::numeric_limits<double>::infinity();
      int label = kNoLabel;
      for (std::size_t i = 0; i < spec.surfaces.size(); ++i) {
        const auto t = intersect(spec.surfaces[i], origin, dir);
        if (t && *t < best) {
          best = *t;
          label = static_cast<int>(i);
        }
      }
      if (label == kNoLabel) continue;
      frame.labels(y, x) = label;
      frame.truth.set(x, y, best);

      double disparity = cam.fB() / best;
      if (spec.disparity_noise > 0) disparity += noise(rng);
      if (!(disparity > 0)) continue;
      if (spec.quantize) {
        if (quantize_to_step(disparity, cam.disparity_step) <= 0) continue;
        frame.depth.set(x, y, quantize_disparity_to_depth(disparity, cam));
      } else {
        frame.depth.set(x, y, spec.disparity_noise > 0 ? cam.fB() / disparity : best);
      }
    }
  }
  return frame;
}

}  // namespace sldepth
