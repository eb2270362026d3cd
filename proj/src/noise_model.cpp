#include "sldepth/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace sldepth {

LogLogFit fit_loglog(std::span<const double> z, std::span<const double> dz) {
  if (z.size() != dz.size()) throw AnalysisError("fit_loglog: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] > 0) || !(dz[i] > 0)) continue;
    const double x = std::log(z[i]);
    const double y = std::log(dz[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw AnalysisError("fit_loglog: need at least two positive pairs");
  const double nn = static_cast<double>(n);
  const double mx = sx / nn;
  const double my = sy / nn;
  const double varx = sxx / nn - mx * mx;
  if (!(varx > 0)) throw AnalysisError("fit_loglog: all depths identical");
  const double slope = (sxy / nn - mx * my) / varx;
  return {slope, my - slope * mx};
}

ResolutionAnalysis analyze_depth_resolution(std::span<const double> depths) {
  std::vector<double> z;
  z.reserve(depths.size());
  for (double d : depths)
    if (std::isfinite(d) && d > 0) z.push_back(d);
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end()), z.end());
  if (z.size() < 3) throw AnalysisError("resolution analysis needs at least 3 unique depths");

  ResolutionAnalysis out;
  out.delta_z.resize(z.size() - 1);
  for (std::size_t k = 0; k + 1 < z.size(); ++k) out.delta_z[k] = z[k + 1] - z[k];
  const auto fit = fit_loglog(std::span(z.data(), out.delta_z.size()), out.delta_z);
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.unique_depths = std::move(z);
  return out;
}

ResolutionAnalysis simulate_quantized_depths(double z_min, double z_max, const Camera& cam) {
  cam.validate();
  if (!(z_min > 0) || !(z_min < z_max)) throw DomainError("simulate_quantized_depths: need 0 < z_min < z_max");
  std::vector<double> quantized;
  const long first = static_cast<long>(std::ceil(z_min));
  const long last = static_cast<long>(std::floor(z_max));
  quantized.reserve(static_cast<std::size_t>(std::max(0L, last - first + 1)));
  for (long z = first; z <= last; ++z) quantized.push_back(quantize_depth(static_cast<double>(z), cam));
  return analyze_depth_resolution(quantized);
}

std::vector<double> unique_disparities(const DepthMap& map, const Camera& cam) {
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(map.valid_count()));
  for (Eigen::Index i = 0; i < map.size(); ++i)
    if (map.valid.data()[i]) d.push_back(depth_to_disparity(map.values.data()[i], cam));
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

double estimate_subpixel_resolution(const DepthMap& map, const Camera& cam) {
  constexpr double kBin = 1e-4;
  const auto d = unique_disparities(map, cam);
  if (d.size() < 10) throw AnalysisError("subpixel estimate needs at least 10 unique disparities");

  std::unordered_map<long long, int> hist;
  for (std::size_t i = 0; i + 1 < d.size(); ++i) ++hist[std::llround((d[i + 1] - d[i]) / kBin)];
  long long mode_bin = 0;
  int mode_count = -1;
  for (const auto& [bin, count] : hist)
    if (count > mode_count || (count == mode_count && bin < mode_bin)) {
      mode_bin = bin;
      mode_count = count;
    }
  const double s0 = static_cast<double>(mode_bin) * kBin;
  if (!(s0 > 0)) throw AnalysisError("subpixel estimate: degenerate disparity gaps");

  // Index the low-jitter levels by counting steps between neighbours and fit
  // d = c + s k, which needs no absolute level number.
  const double half = cam.depth_step / 2.0;
  auto jitter = [&](double di) { return di * di * half / cam.fB(); };
  std::vector<double> ks, ds;
  double k = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (jitter(d[i]) >= s0 / 4) break;
    if (i > 0) k += std::round((d[i] - d[i - 1]) / s0);
    ks.push_back(k);
    ds.push_back(d[i]);
  }
  if (ks.size() < 10) return s0;
  const double km = std::accumulate(ks.begin(), ks.end(), 0.0) / static_cast<double>(ks.size());
  const double dm = std::accumulate(ds.begin(), ds.end(), 0.0) / static_cast<double>(ds.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    sxy += (ks[i] - km) * (ds[i] - dm);
    sxx += (ks[i] - km) * (ks[i] - km);
  }
  if (!(sxx > 0)) return s0;
  const double s1 = sxy / sxx;

  // Every reported depth Z pins n s to fB / [Z + h, Z - h]; intersect those
  // bounds over all unambiguously indexed levels.
  double lo = 0, hi = std::numeric_limits<double>::infinity();
  for (double di : d) {
    if (jitter(di) >= s1 / 4) break;
    const double n = std::round(di / s1);
    if (n < 1) continue;
    const double z = cam.fB() / di;
    lo = std::max(lo, cam.fB() / ((z + half) * n));
    hi = std::min(hi, cam.fB() / ((z - half) * n));
  }
  // Depths that are exact multiples pin lo == hi; allow for rounding there.
  if (!(lo <= hi * (1 + 1e-12)) || !std::isfinite(hi)) return s1;
  return 0.5 * (lo + hi);
}

std::map<long, int> audit_disparity_levels(const DepthMap& map, const Camera& cam, double step) {
  if (!(step > 0)) throw DomainError("audit_disparity_levels: step must be positive");
  std::map<long, int> counts;
  for (double d : unique_disparities(map, cam)) ++counts[static_cast<long>(std::floor(d + step / 2))];
  return counts;
}

}  // namespace sldepth
