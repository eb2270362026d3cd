#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sldepth/camera.hpp"
#include "sldepth/raster.hpp"

namespace sldepth {

/// D(x, y) = alpha x + beta y + gamma in disparity space.
struct AffinePlane {
  double alpha = 0;
  double beta = 0;
  double gamma = 0;

  double operator()(double x, double y) const { return alpha * x + beta * y + gamma; }
};

/// aX + bY + cZ + 1 = 0 in the camera frame. Planes through the camera
/// centre have no representation, which is exactly the set of planes that
/// are not affine in disparity.
struct WorldPlane {
  Eigen::Vector3d abc = Eigen::Vector3d::Zero();

  Eigen::Vector3d unit_normal() const { return abc.normalized(); }
  double distance(const Eigen::Vector3d& p) const { return std::abs(abc.dot(p) + 1.0) / abc.norm(); }
};

struct PlaneModel {
  AffinePlane affine;
  WorldPlane world;
  std::size_t support = 0;
};

/// alpha = -aB, beta = -bB, gamma = -B (cf - au - bv).
AffinePlane world_to_affine(const WorldPlane& plane, const Camera& cam);

/// a = -alpha/B, b = -beta/B, c = (-gamma/B + au + bv)/f.
/// Throws ConversionError for non-finite results or a plane at infinity.
WorldPlane disparity_plane_to_world(const AffinePlane& affine, const Camera& cam);

PlaneModel make_plane_model(const AffinePlane& affine, const Camera& cam, std::size_t support = 0);

// --- non-planarity detection -------------------------------------------------

struct ResponseTag {};
using ResponseMap = MaskedRaster<double, ResponseTag>;

/// Laplacian-of-Gaussian kernel of half-width ceil(3 sigma), shifted to sum
/// to zero so that it annihilates affine signals exactly.
Raster<double> log_kernel(double sigma);

/// LoG filtered disparity. A pixel is valid only if its whole kernel support
/// lies inside the image on valid disparities.
ResponseMap log_response(const DisparityMap& dmap, double sigma);

using PixelRegion = std::vector<Eigen::Vector2i>;

struct SegmentParams {
  double sigma = 2.0;
  /// Fixed |LoG| threshold in px / px^2, identical at every depth.
  double tau = 0.02;
  int min_area = 100;
};

/// 4-connected components of {|LoG| <= tau}, smaller than min_area dropped,
/// ordered by their first pixel in raster order.
std::vector<PixelRegion> segment_planar(const DisparityMap& dmap, const SegmentParams& params);

// --- fitting -----------------------------------------------------------------

struct DisparitySample {
  double x = 0;
  double y = 0;
  double d = 0;
};

/// Robust affine fit of D on (x, y): least squares, then Huber IRLS with
/// threshold 1.345 * MAD until the coefficients move less than 1e-9 or
/// 20 iterations pass. Throws FitError for fewer than 3 samples or collinear
/// pixel positions.
AffinePlane fit_plane_disparity(std::span<const DisparitySample> samples);

struct RefineParams {
  /// Fixed disparity residual bound in px; <= 0 selects 3 * disparity_step.
  double disparity_threshold = 0;
  double merge_angle_deg = 2.0;
  int max_iterations = 50;
  /// Residuals within this much of the best one count as a tie (px).
  double tie_tolerance = 1e-9;
};

struct PlaneSegmentation {
  LabelImage labels;  // plane index per pixel or kNoLabel
  std::vector<PlaneModel> planes;
  int iterations = 0;
  bool converged = false;
};

/// k-means style alternation between plane fits and pixel assignment.
///
/// Each round fits every plane from its pixels, merges pairs whose world
/// normals are within merge_angle_deg and whose centroids fall within the
/// disparity threshold of each other's model, then gives every valid pixel
/// to the plane with the smallest residual if that residual is within the
/// threshold. Ties go to the majority label of the 8-neighbourhood, then to
/// the lowest index. Stops when the labelling no longer changes.
PlaneSegmentation refine_segmentation(const DisparityMap& dmap, std::span<const PixelRegion> initial,
                                      const Camera& cam, const RefineParams& params = {});

struct PlaneExtractionParams {
  SegmentParams segment;
  RefineParams refine;
};

/// log_response -> segment_planar -> refine_segmentation.
PlaneSegmentation extract_planes(const DisparityMap& dmap, const Camera& cam, const PlaneExtractionParams& params = {});

/// Resolved disparity residual threshold for a camera.
double disparity_threshold(const RefineParams& params, const Camera& cam);

/// Fraction of truth-labelled pixels whose predicted plane is matched to
/// their truth label. Predicted and truth labels are paired one-to-one,
/// greedily by overlap; unmatched or unlabelled predictions count as wrong.
double label_accuracy(const LabelImage& predicted, const LabelImage& truth);

// --- rotation from planes ----------------------------------------------------

/// Rotation R maximizing sum <R n_i, n'_i> over unit normals of matched
/// planes (orthogonal Procrustes with a determinant correction). Throws
/// UnderdeterminedError with fewer than two pairs or only parallel normals.
Eigen::Matrix3d rotation_from_matched_planes(std::span<const std::pair<PlaneModel, PlaneModel>> pairs);
Eigen::Matrix3d rotation_from_matched_planes(std::span<const std::pair<WorldPlane, WorldPlane>> pairs);

/// Geodesic angle of a rotation matrix, radians.
double rotation_angle(const Eigen::Matrix3d& R);

// --- fixed metric threshold baseline -----------------------------------------

inline constexpr std::int32_t kAmbiguousLabel = -2;

/// Total least squares plane through 3D points (smallest principal axis).
WorldPlane fit_plane_pca(std::span<const Eigen::Vector3d> points);

/// Point-to-plane test with one metric threshold for all depths: the index of
/// the only plane within `threshold` mm, kNoLabel if none, kAmbiguousLabel
/// if several.
std::vector<std::int32_t> classify_fixed_threshold(std::span<const Eigen::Vector3d> points,
                                                   std::span<const WorldPlane> planes, double threshold);

}  // namespace sldepth
