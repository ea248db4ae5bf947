#pragma once

#include <span>
#include <vector>

#include "ptzcalib/core/levenberg_marquardt.hpp"
#include "ptzcalib/core/types.hpp"

namespace ptzcalib {

struct TwoPointProblem {
  CameraBase base;
  Correspondence corr_a;
  Correspondence corr_b;

  /// Throws DegenerateConfiguration for coincident world points or pixels,
  /// or a world point at the camera center.
  void validate() const;
};

struct CalibSolution {
  PtzParams ptz;
  double reprojection_rmse = 0.0;
  bool converged = false;
};

/// Scalars of the two-ray angle constraint: a = |x1|^2, b = |x2|^2,
/// c = x1.x2 with principal-point-centered pixels, d = cos of the 3D angle
/// between the viewing directions of the two world points.
struct FocalConstraint {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  /// Coefficients (A, B, C) of A F^2 + B F + C = 0 with F = f^2.
  Eigen::Vector3d quadratic() const {
    const double d2 = d * d;
    return {d2 - 1.0, d2 * (a + b) - 2.0 * c, d2 * a * b - c * c};
  }
  /// cos of the angle between the back-projected pixels at focal length f.
  double cos_angle(double f) const {
    const double f2 = f * f;
    return (c + f2) / std::sqrt((a + f2) * (b + f2));
  }
};

FocalConstraint focal_constraint(const TwoPointProblem& problem);

/// Focal lengths consistent with the angle between two correspondences.
/// The closed-form root (A F = (-B - sqrt(disc)) / 2) comes first when it is
/// admissible; the second positive root follows when it also satisfies the
/// unsquared angle equation. Throws DegenerateConfiguration when the 3D
/// angle is within 1e-4 rad of 0 or pi, SolverFailure when no root exists.
std::vector<double> focal_from_two_points(const TwoPointProblem& problem);

/// Raw closed-form pan/tilt candidate before verification; cos_tilt and
/// sin_tilt are the unnormalized values from the 2x2 elimination.
struct PanTiltCandidate {
  double pan = 0.0;
  double tilt = 0.0;
  double cos_tilt = 0.0;
  double sin_tilt = 0.0;
};

std::vector<PanTiltCandidate> pan_tilt_candidates(const CameraBase& base, double focal_length,
                                                  const Correspondence& corr);

/// Pan/tilt at a fixed focal length from one correspondence. Candidates are
/// verified by reprojection (<= 1e-3 px) and sorted by reprojection error.
/// Throws SolverFailure when none survive and DegenerateConfiguration when
/// the point lies on the pan axis.
std::vector<PtzParams> pan_tilt_from_one_point(const CameraBase& base, double focal_length,
                                               const Correspondence& corr);

/// Levenberg-Marquardt over (pan, tilt, focal) minimizing the pixel
/// reprojection error. Never returns a solution worse than `init`.
CalibSolution refine_ptz(const CameraBase& base, const PtzParams& init,
                         std::span<const Correspondence> correspondences, const LmOptions& options = {});

double reprojection_rmse(const CameraBase& base, const PtzParams& ptz,
                         std::span<const Correspondence> correspondences);

/// Focal from two points, pan/tilt from the first point, joint refinement;
/// the least-RMSE branch wins.
CalibSolution calibrate_two_points(const TwoPointProblem& problem);

}  // namespace ptzcalib
