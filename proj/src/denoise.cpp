#include "sldepth/denoise.hpp"

#include <cmath>
#include <vector>

#include "sldepth/errors.hpp"

namespace sldepth {
namespace {

std::vector<double> spatial_kernel(double sigma_s, int r) {
  std::vector<double> w(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)));
  const double inv = 1.0 / (2.0 * sigma_s * sigma_s);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      w[static_cast<std::size_t>((dy + r) * (2 * r + 1) + dx + r)] = std::exp(-(dx * dx + dy * dy) * inv);
  return w;
}

// range_sigma(p) returns the range std at centre p, or <= 0 for a purely spatial kernel.
template <typename RangeSigma>
DepthMap weighted_mean(const DepthMap& in, const FilterConfig& cfg, RangeSigma&& range_sigma) {
  const int r = cfg.effective_radius();
  const auto ws = spatial_kernel(cfg.sigma_s, r);
  const int w = static_cast<int>(in.width());
  const int h = static_cast<int>(in.height());
  DepthMap out(in.width(), in.height());

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!in.valid(y, x)) continue;
      const double zp = in.values(y, x);
      const double sd = range_sigma(zp);
      const double inv_range = sd > 0 ? 1.0 / (2.0 * sd * sd) : 0.0;
      double num = 0, den = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int qy = y + dy;
        if (qy < 0 || qy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int qx = x + dx;
          if (qx < 0 || qx >= w || !in.valid(qy, qx)) continue;
          const double zq = in.values(qy, qx);
          const double dz = zq - zp;
          double weight = ws[static_cast<std::size_t>((dy + r) * (2 * r + 1) + dx + r)];
          if (inv_range > 0) weight *= std::exp(-dz * dz * inv_range);
          num += weight * dz;
          den += weight;
        }
      }
      // The centre always contributes w_s(0) w_d(0) = 1, so den >= 1.
      // Offsets from z_p keep constant regions exactly constant.
      out.set(x, y, zp + num / den);
    }
  }
  return out;
}

}  // namespace

int FilterConfig::effective_radius() const {
  return radius > 0 ? radius : static_cast<int>(std::ceil(3.0 * sigma_s));
}

FilterConfig FilterConfig::adaptive_defaults(const Camera& cam) {
  FilterConfig cfg;
  cfg.sigma_s = 3.0;
  cfg.k = 3.0 * cam.disparity_step / cam.fB();
  return cfg;
}

void validate(const FilterConfig& cfg, FilterMode mode) {
  if (!(cfg.sigma_s > 0) || !std::isfinite(cfg.sigma_s)) throw ConfigError("sigma_s must be positive");
  if (cfg.radius < 0) throw ConfigError("radius must be >= 1 (or 0 for the default)");
  if (cfg.effective_radius() < 1) throw ConfigError("kernel radius must be >= 1");
  switch (mode) {
    case FilterMode::gaussian:
      if (cfg.sigma_d || cfg.k) throw ConfigError("gaussian filter takes neither sigma_d nor k");
      break;
    case FilterMode::bilateral:
      if (cfg.k) throw ConfigError("bilateral filter takes sigma_d, not k");
      if (!cfg.sigma_d || !(*cfg.sigma_d > 0)) throw ConfigError("bilateral filter needs sigma_d > 0");
      break;
    case FilterMode::adaptive:
      if (cfg.sigma_d) throw ConfigError("adaptive filter takes k, not sigma_d");
      if (!cfg.k || !(*cfg.k > 0) || !std::isfinite(*cfg.k)) throw ConfigError("adaptive filter needs k > 0");
      break;
  }
}

DepthMap gaussian_filter(const DepthMap& map, const FilterConfig& cfg) {
  validate(cfg, FilterMode::gaussian);
  return weighted_mean(map, cfg, [](double) { return 0.0; });
}

DepthMap bilateral_filter(const DepthMap& map, const FilterConfig& cfg) {
  validate(cfg, FilterMode::bilateral);
  const double sd = *cfg.sigma_d;
  return weighted_mean(map, cfg, [sd](double) { return sd; });
}

DepthMap adaptive_bilateral_filter(const DepthMap& map, const FilterConfig& cfg) {
  validate(cfg, FilterMode::adaptive);
  const double k = *cfg.k;
  return weighted_mean(map, cfg, [k](double z) { return k * z * z; });
}

DepthMap apply_filter(const DepthMap& map, const FilterConfig& cfg, FilterMode mode) {
  switch (mode) {
    case FilterMode::gaussian: return gaussian_filter(map, cfg);
    case FilterMode::bilateral: return bilateral_filter(map, cfg);
    case FilterMode::adaptive: return adaptive_bilateral_filter(map, cfg);
  }
  throw ConfigError("unknown filter mode");
}

Raster<double> adaptive_range_sigma(const DepthMap& map, double k) {
  return map.valid.select(k * map.values.square(), 0.0);
}

}  // namespace sldepth
