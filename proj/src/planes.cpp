#include "sldepth/planes.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cmath>
#include <numbers>
#include <limits>
#include <map>
#include <set>
#include <numeric>

#include <Eigen/Dense>

#include "sldepth/errors.hpp"

namespace sldepth {

AffinePlane world_to_affine(const WorldPlane& plane, const Camera& cam) {
  const double a = plane.abc.x(), b = plane.abc.y(), c = plane.abc.z();
  return {-a * cam.B, -b * cam.B, -cam.B * (c * cam.f - a * cam.u - b * cam.v)};
}

WorldPlane disparity_plane_to_world(const AffinePlane& affine, const Camera& cam) {
  const double a = -affine.alpha / cam.B;
  const double b = -affine.beta / cam.B;
  const double c = (-affine.gamma / cam.B + a * cam.u + b * cam.v) / cam.f;
  const Eigen::Vector3d abc(a, b, c);
  if (!abc.allFinite()) throw ConversionError("disparity plane maps to non-finite world coefficients");
  if (!(abc.norm() > 0)) throw ConversionError("zero disparity plane is at infinity");
  return {abc};
}

PlaneModel make_plane_model(const AffinePlane& affine, const Camera& cam, std::size_t support) {
  return {affine, disparity_plane_to_world(affine, cam), support};
}

Raster<double> log_kernel(double sigma) {
  if (!(sigma > 0)) throw DomainError("LoG sigma must be positive");
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  Raster<double> k(2 * r + 1, 2 * r + 1);
  const double s2 = sigma * sigma;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const double q = (dx * dx + dy * dy) / (2.0 * s2);
      k(dy + r, dx + r) = -1.0 / (std::numbers::pi * s2 * s2) * (1.0 - q) * std::exp(-q);
    }
  k -= k.mean();
  return k;
}

ResponseMap log_response(const DisparityMap& dmap, double sigma) {
  const Raster<double> kernel = log_kernel(sigma);
  const int r = static_cast<int>(kernel.rows() / 2);
  const int w = static_cast<int>(dmap.width()), h = static_cast<int>(dmap.height());

  // Summed-area table of invalid pixels for the support test.
  Raster<int> invalid = Raster<int>::Zero(h + 1, w + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      invalid(y + 1, x + 1) = invalid(y, x + 1) + invalid(y + 1, x) - invalid(y, x) + (dmap.valid(y, x) ? 0 : 1);

  // The kernel is A g(x) g(y) (1 - (x^2 + y^2) / 2s^2) - m, a sum of four
  // separable terms: one horizontal pass per row factor, then vertical passes.
  const int n = 2 * r + 1;
  const double s2 = sigma * sigma;
  const double amp = -1.0 / (std::numbers::pi * s2 * s2);
  const double m = amp - kernel(r, r);  // the subtracted mean
  std::vector<double> g(static_cast<std::size_t>(n)), gq(static_cast<std::size_t>(n));
  for (int t = -r; t <= r; ++t) {
    const double q = t * t / (2.0 * s2);
    g[static_cast<std::size_t>(t + r)] = std::exp(-q);
    gq[static_cast<std::size_t>(t + r)] = q * std::exp(-q);
  }

  ResponseMap out(w, h);
  if (w < n || h < n) return out;
  const int ow = w - 2 * r;
  Raster<double> hg(h, ow), hgq(h, ow), hbox(h, ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double a = 0, b = 0, c = 0;
      for (int t = 0; t < n; ++t) {
        const double v = dmap.values(y, x + t);
        a += g[static_cast<std::size_t>(t)] * v;
        b += gq[static_cast<std::size_t>(t)] * v;
        c += v;
      }
      hg(y, x) = a;
      hgq(y, x) = b;
      hbox(y, x) = c;
    }
  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      const int bad = invalid(y + r + 1, x + r + 1) - invalid(y - r, x + r + 1) - invalid(y + r + 1, x - r) +
                      invalid(y - r, x - r);
      if (bad > 0) continue;
      double gg = 0, qg = 0, box = 0;
      for (int t = 0; t < n; ++t) {
        const int yy = y - r + t;
        const double gv = g[static_cast<std::size_t>(t)];
        gg += gv * hg(yy, x - r);
        qg += gv * hgq(yy, x - r) + gq[static_cast<std::size_t>(t)] * hg(yy, x - r);
        box += hbox(yy, x - r);
      }
      out.set(x, y, amp * (gg - qg) - m * box);
    }
  }
  return out;
}

std::vector<PixelRegion> segment_planar(const DisparityMap& dmap, const SegmentParams& params) {
  if (!(params.tau > 0)) throw ConfigError("tau must be positive");
  const ResponseMap response = log_response(dmap, params.sigma);
  const int w = static_cast<int>(dmap.width()), h = static_cast<int>(dmap.height());
  Raster<bool> planar = response.valid && (response.values.abs() <= params.tau);
  Raster<bool> seen = Raster<bool>::Constant(h, w, false);

  std::vector<PixelRegion> regions;
  std::vector<Eigen::Vector2i> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!planar(y, x) || seen(y, x)) continue;
      PixelRegion region;
      stack.assign(1, {x, y});
      seen(y, x) = true;
      while (!stack.empty()) {
        const Eigen::Vector2i p = stack.back();
        stack.pop_back();
        region.push_back(p);
        constexpr int kDx[4] = {1, -1, 0, 0};
        constexpr int kDy[4] = {0, 0, 1, -1};
        for (int n = 0; n < 4; ++n) {
          const int qx = p.x() + kDx[n], qy = p.y() + kDy[n];
          if (qx < 0 || qy < 0 || qx >= w || qy >= h || seen(qy, qx) || !planar(qy, qx)) continue;
          seen(qy, qx) = true;
          stack.emplace_back(qx, qy);
        }
      }
      if (static_cast<int>(region.size()) >= params.min_area) regions.push_back(std::move(region));
    }
  }
  return regions;
}

namespace {

// Samples stored column-wise with x and y centred on their mean.
struct CentredSamples {
  std::vector<double> x, y, d;
  double mx = 0, my = 0;

  explicit CentredSamples(std::span<const DisparitySample> s) : x(s.size()), y(s.size()), d(s.size()) {
    for (const auto& p : s) {
      mx += p.x;
      my += p.y;
    }
    mx /= static_cast<double>(s.size());
    my /= static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      x[i] = s[i].x - mx;
      y[i] = s[i].y - my;
      d[i] = s[i].d;
    }
  }
  std::size_t size() const { return d.size(); }
  // Coefficients of d = a x + b y + c in the centred frame.
  Eigen::Vector3d centred(const AffinePlane& p) const { return {p.alpha, p.beta, p.gamma + p.alpha * mx + p.beta * my}; }
  AffinePlane uncentred(const Eigen::Vector3d& c) const { return {c.x(), c.y(), c.z() - c.x() * mx - c.y() * my}; }
};

// Weighted least squares with Huber weights min(1, delta / |r|) of the
// residuals r against `plane`; delta = inf gives plain least squares.
// Two samples per step so the arithmetic maps onto packed registers.
AffinePlane solve_huber(const CentredSamples& s, const AffinePlane& plane, double delta) {
  using Pair = Eigen::Array2d;
  const Eigen::Vector3d c = s.centred(plane);
  const Pair pa = Pair::Constant(c.x()), pb = Pair::Constant(c.y()), pc = Pair::Constant(c.z());
  const Pair pd = Pair::Constant(delta);
  std::array<Pair, 9> acc;
  for (auto& v : acc) v.setZero();
  auto add = [&](const Pair& x, const Pair& y, const Pair& d, const Pair& w) {
    const Pair wx = w * x, wy = w * y;
    acc[0] += wx * x;
    acc[1] += wx * y;
    acc[2] += wy * y;
    acc[3] += wx;
    acc[4] += wy;
    acc[5] += w;
    acc[6] += wx * d;
    acc[7] += wy * d;
    acc[8] += w * d;
  };
  const bool unit = std::isinf(delta);
  const std::size_t n = s.size();
  for (std::size_t i = 0; i + 1 < n; i += 2) {
    const Pair x = Pair::Map(&s.x[i]), y = Pair::Map(&s.y[i]), d = Pair::Map(&s.d[i]);
    add(x, y, d, unit ? Pair::Ones().eval() : (pd / (d - pa * x - pb * y - pc).abs().max(pd)).eval());
  }
  if (n % 2 == 1) {
    // Pad the odd sample with a zero-weight twin.
    const std::size_t i = n - 1;
    const double e = std::abs(s.d[i] - c.x() * s.x[i] - c.y() * s.y[i] - c.z());
    add(Pair(s.x[i], 0), Pair(s.y[i], 0), Pair(s.d[i], 0), Pair(unit ? 1.0 : delta / std::max(e, delta), 0));
  }
  std::array<double, 9> t;
  for (std::size_t k = 0; k < 9; ++k) t[k] = acc[k].sum();
  Eigen::Matrix3d ata;
  ata << t[0], t[1], t[3], t[1], t[2], t[4], t[3], t[4], t[5];
  return s.uncentred(ata.ldlt().solve(Eigen::Vector3d(t[6], t[7], t[8])));
}

// Unsigned key with the same order as the double it encodes.
std::uint64_t order_key(double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  const std::uint64_t negative = std::uint64_t{0} - (u >> 63);
  return u ^ (negative | (std::uint64_t{1} << 63));
}

// Exact median: histogram the top 16 key bits, then select within the
// bucket(s) holding the middle rank(s).
double median_of(const std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t hi_rank = n / 2, lo_rank = n % 2 == 0 ? hi_rank - 1 : hi_rank;
  std::vector<std::uint32_t> count(1 << 16, 0);
  for (double x : v) ++count[order_key(x) >> 48];
  std::size_t below = 0, lo_bucket = 0;
  while (below + count[lo_bucket] <= lo_rank) below += count[lo_bucket++];
  std::size_t hi_bucket = lo_bucket, through = below + count[lo_bucket];
  while (through <= hi_rank) through += count[++hi_bucket];
  std::vector<double> middle;
  middle.reserve(through - below);
  for (double x : v) {
    const std::size_t b = order_key(x) >> 48;
    if (b - lo_bucket <= hi_bucket - lo_bucket) middle.push_back(x);
  }
  const auto first = middle.begin();
  std::nth_element(first, first + static_cast<long>(hi_rank - below), middle.end());
  double m = first[static_cast<long>(hi_rank - below)];
  if (lo_rank != hi_rank) m = 0.5 * (m + *std::max_element(first, first + static_cast<long>(hi_rank - below)));
  return m;
}

}  // namespace

namespace {

// Robust fit; IRLS starts from `start` when given, else from least squares.
AffinePlane fit_plane_from(std::span<const DisparitySample> samples, const AffinePlane* start) {
  if (samples.size() < 3) throw FitError("plane fit needs at least 3 pixels");
  const CentredSamples s(samples);
  double sxx = 0, sxy = 0, syy = 0, dmax = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxx += s.x[i] * s.x[i];
    sxy += s.x[i] * s.y[i];
    syy += s.y[i] * s.y[i];
    dmax = std::max(dmax, std::abs(s.d[i]));
  }
  Eigen::Matrix2d scatter;
  scatter << sxx, sxy, sxy, syy;
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(scatter).eigenvalues();
  if (!(ev(0) > 1e-10 * std::max(1.0, ev(1)))) throw FitError("plane fit support is collinear");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  AffinePlane plane = start ? *start : solve_huber(s, AffinePlane{}, kInf);
  const double floor = 1e-12 * (1.0 + dmax);
  std::vector<double> r(s.size());
  double delta = 0;
  bool scale_settled = false;
  for (int iter = 0; iter < 20; ++iter) {
    // The scale is re-estimated until it moves by less than 1%, then held.
    if (!scale_settled) {
      const Eigen::Vector3d c = s.centred(plane);
      for (std::size_t i = 0; i < s.size(); ++i) r[i] = s.d[i] - c.x() * s.x[i] - c.y() * s.y[i] - c.z();
      const double med = median_of(r);
      for (auto& v : r) v = std::abs(v - med);
      const double next_delta = std::max(1.345 * median_of(r), floor);
      scale_settled = iter > 0 && std::abs(next_delta - delta) <= 0.01 * delta;
      delta = next_delta;
    }
    const AffinePlane next = solve_huber(s, plane, delta);
    const double change = std::max({std::abs(next.alpha - plane.alpha), std::abs(next.beta - plane.beta),
                                    std::abs(next.gamma - plane.gamma)});
    plane = next;
    if (change < 1e-9) break;
  }
  return plane;
}

}  // namespace

AffinePlane fit_plane_disparity(std::span<const DisparitySample> samples) { return fit_plane_from(samples, nullptr); }

double disparity_threshold(const RefineParams& params, const Camera& cam) {
  return params.disparity_threshold > 0 ? params.disparity_threshold : 3.0 * cam.disparity_step;
}

namespace {

struct Candidate {
  AffinePlane affine;
  Eigen::Vector3d normal;
  Eigen::Vector2d centroid;
};

std::vector<DisparitySample> samples_of(const DisparityMap& dmap, const std::vector<Eigen::Vector2i>& pixels) {
  std::vector<DisparitySample> s;
  s.reserve(pixels.size());
  for (const auto& p : pixels) s.push_back({double(p.x()), double(p.y()), dmap.at(p.x(), p.y())});
  return s;
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

PlaneSegmentation refine_segmentation(const DisparityMap& dmap, std::span<const PixelRegion> initial,
                                      const Camera& cam, const RefineParams& params) {
  const int w = static_cast<int>(dmap.width()), h = static_cast<int>(dmap.height());
  const double threshold = disparity_threshold(params, cam);
  const double merge_cos = std::cos(params.merge_angle_deg * std::numbers::pi / 180.0);

  PlaneSegmentation result;
  result.labels = LabelImage::Constant(h, w, kNoLabel);
  LabelImage& labels = result.labels;
  int label_count = 0;
  for (const auto& region : initial) {
    bool any = false;
    for (const auto& p : region) {
      if (p.x() < 0 || p.y() < 0 || p.x() >= w || p.y() >= h || !dmap.is_valid(p.x(), p.y())) continue;
      if (labels(p.y(), p.x()) != kNoLabel) continue;
      labels(p.y(), p.x()) = label_count;
      any = true;
    }
    if (any) ++label_count;
  }

  std::vector<Candidate> planes;
  for (int iter = 1; iter <= std::max(1, params.max_iterations); ++iter) {
    result.iterations = iter;

    // (1) fit every current label.
    std::vector<std::vector<Eigen::Vector2i>> members(static_cast<std::size_t>(label_count));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (labels(y, x) >= 0) members[static_cast<std::size_t>(labels(y, x))].emplace_back(x, y);

    std::vector<int> fitted_label;
    std::vector<Candidate> fitted;
    for (int l = 0; l < label_count; ++l) {
      const auto& m = members[static_cast<std::size_t>(l)];
      if (m.size() < 3) continue;
      try {
        const auto samples = samples_of(dmap, m);
        // Labels index the previous pass's planes; start from those.
        const AffinePlane* start = l < static_cast<int>(planes.size()) ? &planes[static_cast<std::size_t>(l)].affine : nullptr;
        const AffinePlane a = fit_plane_from(samples, start);
        Eigen::Vector2d c = Eigen::Vector2d::Zero();
        for (const auto& p : m) c += p.cast<double>();
        c /= static_cast<double>(m.size());
        fitted.push_back({a, disparity_plane_to_world(a, cam).unit_normal(), c});
        fitted_label.push_back(l);
      } catch (const FitError&) {
      } catch (const ConversionError&) {
      }
    }

    // (2) merge near-identical planes.
    const int nf = static_cast<int>(fitted.size());
    std::vector<int> parent(static_cast<std::size_t>(nf));
    std::iota(parent.begin(), parent.end(), 0);
    for (int i = 0; i < nf; ++i) {
      for (int j = i + 1; j < nf; ++j) {
        const auto& pi = fitted[static_cast<std::size_t>(i)];
        const auto& pj = fitted[static_cast<std::size_t>(j)];
        if (pi.normal.dot(pj.normal) < merge_cos) continue;
        const double ri = std::abs(pi.affine(pi.centroid.x(), pi.centroid.y()) - pj.affine(pi.centroid.x(), pi.centroid.y()));
        const double rj = std::abs(pj.affine(pj.centroid.x(), pj.centroid.y()) - pi.affine(pj.centroid.x(), pj.centroid.y()));
        if (ri < threshold && rj < threshold) parent[static_cast<std::size_t>(find_root(parent, j))] = find_root(parent, i);
      }
    }
    // old label -> merged plane index
    std::vector<int> old_to_new(static_cast<std::size_t>(label_count), kNoLabel);
    std::vector<int> root_to_new(static_cast<std::size_t>(nf), kNoLabel);
    planes.clear();
    std::vector<std::vector<Eigen::Vector2i>> merged_members;
    for (int i = 0; i < nf; ++i) {
      const int root = find_root(parent, i);
      if (root_to_new[static_cast<std::size_t>(root)] == kNoLabel) {
        root_to_new[static_cast<std::size_t>(root)] = static_cast<int>(merged_members.size());
        merged_members.emplace_back();
      }
      const int idx = root_to_new[static_cast<std::size_t>(root)];
      old_to_new[static_cast<std::size_t>(fitted_label[static_cast<std::size_t>(i)])] = idx;
      auto& dst = merged_members[static_cast<std::size_t>(idx)];
      const auto& src = members[static_cast<std::size_t>(fitted_label[static_cast<std::size_t>(i)])];
      dst.insert(dst.end(), src.begin(), src.end());
    }
    for (std::size_t m = 0; m < merged_members.size(); ++m) {
      bool single = true;
      int only = -1;
      for (int i = 0; i < nf; ++i)
        if (root_to_new[static_cast<std::size_t>(find_root(parent, i))] == static_cast<int>(m)) {
          if (only >= 0) single = false;
          only = i;
        }
      if (single) {
        planes.push_back(fitted[static_cast<std::size_t>(only)]);
      } else {
        const AffinePlane a = fit_plane_disparity(samples_of(dmap, merged_members[m]));
        Eigen::Vector2d c = Eigen::Vector2d::Zero();
        for (const auto& p : merged_members[m]) c += p.cast<double>();
        c /= static_cast<double>(merged_members[m].size());
        planes.push_back({a, disparity_plane_to_world(a, cam).unit_normal(), c});
      }
    }
    if (planes.empty()) {
      labels.setConstant(kNoLabel);
      result.converged = true;
      return result;
    }

    // Previous labelling expressed in the merged indices.
    LabelImage previous(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        previous(y, x) = labels(y, x) >= 0 ? old_to_new[static_cast<std::size_t>(labels(y, x))] : kNoLabel;

    // (3) reassign.
    const int np = static_cast<int>(planes.size());
    LabelImage next = LabelImage::Constant(h, w, kNoLabel);
    std::vector<double> res(static_cast<std::size_t>(np));
    std::vector<int> votes(static_cast<std::size_t>(np));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!dmap.is_valid(x, y)) continue;
        const double d = dmap.at(x, y);
        double best = std::numeric_limits<double>::infinity();
        for (int p = 0; p < np; ++p) {
          res[static_cast<std::size_t>(p)] = std::abs(d - planes[static_cast<std::size_t>(p)].affine(x, y));
          best = std::min(best, res[static_cast<std::size_t>(p)]);
        }
        if (!(best <= threshold)) continue;
        int chosen = kNoLabel, ties = 0;
        for (int p = 0; p < np; ++p)
          if (res[static_cast<std::size_t>(p)] <= best + params.tie_tolerance) {
            if (chosen == kNoLabel) chosen = p;
            ++ties;
          }
        if (ties > 1) {
          std::fill(votes.begin(), votes.end(), 0);
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int qx = x + dx, qy = y + dy;
              if ((dx == 0 && dy == 0) || qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
              const int l = previous(qy, qx);
              if (l >= 0 && res[static_cast<std::size_t>(l)] <= best + params.tie_tolerance) ++votes[static_cast<std::size_t>(l)];
            }
          int best_votes = -1;
          for (int p = 0; p < np; ++p)
            if (res[static_cast<std::size_t>(p)] <= best + params.tie_tolerance && votes[static_cast<std::size_t>(p)] > best_votes) {
              best_votes = votes[static_cast<std::size_t>(p)];
              chosen = p;
            }
        }
        next(y, x) = chosen;
      }
    }

    const bool stable = (next == previous).all();
    labels = std::move(next);
    label_count = np;
    if (stable) {
      result.converged = true;
      break;
    }
  }

  // Drop planes that lost all their pixels and compact the indices.
  std::vector<std::size_t> support(planes.size(), 0);
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels.data()[i] >= 0) ++support[static_cast<std::size_t>(labels.data()[i])];
  std::vector<int> remap(planes.size(), kNoLabel);
  for (std::size_t p = 0; p < planes.size(); ++p) {
    if (support[p] == 0) continue;
    remap[p] = static_cast<int>(result.planes.size());
    result.planes.push_back(make_plane_model(planes[p].affine, cam, support[p]));
  }
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels.data()[i] >= 0) labels.data()[i] = remap[static_cast<std::size_t>(labels.data()[i])];
  return result;
}

PlaneSegmentation extract_planes(const DisparityMap& dmap, const Camera& cam, const PlaneExtractionParams& params) {
  const auto regions = segment_planar(dmap, params.segment);
  return refine_segmentation(dmap, regions, cam, params.refine);
}

double label_accuracy(const LabelImage& predicted, const LabelImage& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
    throw DomainError("label images differ in size");
  std::map<std::pair<int, int>, long> overlap;
  long total = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (truth.data()[i] < 0) continue;
    ++total;
    if (predicted.data()[i] >= 0) ++overlap[{predicted.data()[i], truth.data()[i]}];
  }
  if (total == 0) return 1.0;
  std::vector<std::pair<long, std::pair<int, int>>> ranked;
  for (const auto& [key, n] : overlap) ranked.push_back({n, key});
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::set<int> used_pred, used_truth;
  long correct = 0;
  for (const auto& [n, key] : ranked) {
    if (used_pred.contains(key.first) || used_truth.contains(key.second)) continue;
    used_pred.insert(key.first);
    used_truth.insert(key.second);
    correct += n;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

Eigen::Matrix3d rotation_from_matched_planes(std::span<const std::pair<WorldPlane, WorldPlane>> pairs) {
  if (pairs.size() < 2) throw UnderdeterminedError("rotation needs at least two plane pairs");
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  double spread_from = 0, spread_to = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d n = pairs[i].first.unit_normal();
    const Eigen::Vector3d m = pairs[i].second.unit_normal();
    if (!n.allFinite() || !m.allFinite()) throw UnderdeterminedError("plane without a normal");
    H.noalias() += n * m.transpose();
    for (std::size_t j = 0; j < i; ++j) {
      spread_from = std::max(spread_from, n.cross(pairs[j].first.unit_normal()).norm());
      spread_to = std::max(spread_to, m.cross(pairs[j].second.unit_normal()).norm());
    }
  }
  if (spread_from < 1e-6 || spread_to < 1e-6) throw UnderdeterminedError("all plane normals are parallel");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixV() * D * svd.matrixU().transpose();
}

Eigen::Matrix3d rotation_from_matched_planes(std::span<const std::pair<PlaneModel, PlaneModel>> pairs) {
  std::vector<std::pair<WorldPlane, WorldPlane>> world;
  world.reserve(pairs.size());
  for (const auto& [a, b] : pairs) world.emplace_back(a.world, b.world);
  return rotation_from_matched_planes(std::span<const std::pair<WorldPlane, WorldPlane>>(world));
}

double rotation_angle(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (R.trace() - 1.0));
}

WorldPlane fit_plane_pca(std::span<const Eigen::Vector3d> points) {
  if (points.size() < 3) throw FitError("PCA plane needs at least 3 points");
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : points) c += p;
  c /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) cov.noalias() += (p - c) * (p - c).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  if (!(eig.eigenvalues()(1) > 1e-12 * std::max(1.0, eig.eigenvalues()(2)))) throw FitError("PCA support is degenerate");
  const Eigen::Vector3d n = eig.eigenvectors().col(0);
  const double k = n.dot(c);
  if (std::abs(k) < 1e-12) throw FitError("PCA plane passes through the camera centre");
  return {-n / k};
}

std::vector<std::int32_t> classify_fixed_threshold(std::span<const Eigen::Vector3d> points,
                                                   std::span<const WorldPlane> planes, double threshold) {
  std::vector<std::int32_t> out(points.size(), kNoLabel);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t p = 0; p < planes.size(); ++p) {
      if (planes[p].distance(points[i]) > threshold) continue;
      out[i] = out[i] == kNoLabel ? static_cast<std::int32_t>(p) : kAmbiguousLabel;
    }
  }
  return out;
}

}  // namespace sldepth
