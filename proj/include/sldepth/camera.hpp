#pragma once

#include <cmath>

#include <Eigen/Core>

#include "sldepth/errors.hpp"

namespace sldepth {

/// Pinhole IR camera paired with a structured-light projector.
///
/// Lengths are in millimetres, image quantities in pixels. The defaults
/// describe a first-generation Kinect: 587 px focal length, 75 mm baseline,
/// 1/8 px disparity resolution and 1 mm output depth resolution. The
/// principal point defaults to the centre of a 640x480 image under the
/// convention that pixel (x, y) samples the ray through (x, y) exactly.
template <typename Scalar>
struct CameraModel {
  Scalar f = Scalar(587);
  Scalar B = Scalar(75);
  Scalar u = Scalar(319.5);
  Scalar v = Scalar(239.5);
  Scalar disparity_step = Scalar(0.125);
  Scalar depth_step = Scalar(1);

  /// Product of focal length and baseline (mm * px); D = fB / Z.
  Scalar fB() const { return f * B; }

  Eigen::Matrix<Scalar, 3, 3> intrinsics() const {
    Eigen::Matrix<Scalar, 3, 3> K;
    K << f, Scalar(0), u, Scalar(0), f, v, Scalar(0), Scalar(0), Scalar(1);
    return K;
  }

  bool valid() const {
    using std::isfinite;
    return f > 0 && B > 0 && disparity_step > 0 && depth_step > 0 &&
           isfinite(fB()) && fB() > 0 && isfinite(u) && isfinite(v);
  }

  void validate() const {
    if (!valid()) throw DomainError("CameraModel: f, B, disparity_step, depth_step must be positive and finite");
  }
};

using Camera = CameraModel<double>;

/// Coefficient of the quadratic depth-noise law sigma(Z) = k Z^2 (k in 1/mm).
template <typename Scalar>
struct NoiseParams {
  Scalar k = Scalar(0);

  /// One disparity quantization step propagated through dZ/dD.
  static NoiseParams from_camera(const CameraModel<Scalar>& cam) {
    return NoiseParams{cam.disparity_step / cam.fB()};
  }

  void validate() const {
    if (!(k >= Scalar(0)) || !std::isfinite(k)) throw DomainError("NoiseParams: k must be finite and >= 0");
  }
};

}  // namespace sldepth
