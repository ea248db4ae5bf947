#include "ptzcalib/calib/two_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ptzcalib/core/angles.hpp"
#include "ptzcalib/core/camera.hpp"
#include "ptzcalib/core/errors.hpp"

namespace ptzcalib {

namespace {

constexpr double kMinAngle = 1e-4;            // rad, from 0 and from pi
constexpr double kOpticalColumnEpsilon = 1e-9;
constexpr double kCandidateReprojection = 1e-3;  // px
constexpr double kCosTolerance = 1e-7;

}  // namespace

void TwoPointProblem::validate() const {
  base.validate();
  if (!corr_a.world_point.allFinite() || !corr_b.world_point.allFinite() || !corr_a.pixel.allFinite() ||
      !corr_b.pixel.allFinite()) {
    throw InvalidArgument("correspondences must be finite");
  }
  if ((corr_a.world_point - corr_b.world_point).norm() <= 1e-6) {
    throw DegenerateConfiguration("world points coincide");
  }
  if ((corr_a.world_point - base.center).norm() <= 1e-6 || (corr_b.world_point - base.center).norm() <= 1e-6) {
    throw DegenerateConfiguration("world point coincides with the camera center");
  }
  if ((corr_a.pixel - corr_b.pixel).norm() <= 1e-6) {
    throw DegenerateConfiguration("pixels coincide");
  }
}

FocalConstraint focal_constraint(const TwoPointProblem& problem) {
  const Eigen::Vector2d x1 = problem.corr_a.pixel - problem.base.principal_point;
  const Eigen::Vector2d x2 = problem.corr_b.pixel - problem.base.principal_point;
  const Eigen::Vector3d d1 = (problem.corr_a.world_point - problem.base.center).normalized();
  const Eigen::Vector3d d2 = (problem.corr_b.world_point - problem.base.center).normalized();
  return {x1.squaredNorm(), x2.squaredNorm(), x1.dot(x2), d1.dot(d2)};
}

std::vector<double> focal_from_two_points(const TwoPointProblem& problem) {
  problem.validate();
  const FocalConstraint fc = focal_constraint(problem);
  const double angle = std::acos(std::clamp(fc.d, -1.0, 1.0));
  if (angle <= kMinAngle || angle >= std::numbers::pi - kMinAngle) {
    throw DegenerateConfiguration("the two world points are (anti-)collinear with the camera center");
  }

  const Eigen::Vector3d q = fc.quadratic();
  const double qa = q[0];
  const double qb = q[1];
  const double qc = q[2];
  double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) {
    if (disc < -1e-12 * qb * qb) throw SolverFailure("focal quadratic has no real root");
    disc = 0.0;
  }
  const double sq = std::sqrt(disc);
  // Closed-form root (-B - sqrt) / 2A and its partner, each computed without
  // cancellation.
  double closed_form;
  double partner;
  if (qb >= 0.0) {
    closed_form = (-qb - sq) / (2.0 * qa);
    partner = closed_form != 0.0 ? qc / (qa * closed_form) : (-qb + sq) / (2.0 * qa);
  } else {
    partner = (-qb + sq) / (2.0 * qa);
    closed_form = partner != 0.0 ? qc / (qa * partner) : (-qb - sq) / (2.0 * qa);
  }

  std::vector<double> focals;
  for (double f2 : {closed_form, partner}) {
    if (!(f2 > 0.0) || !std::isfinite(f2)) continue;
    const double f = std::sqrt(f2);
    if (std::abs(fc.cos_angle(f) - fc.d) > kCosTolerance) continue;
    const bool duplicate = std::any_of(focals.begin(), focals.end(),
                                       [f](double g) { return std::abs(g - f) <= 1e-12 * std::max(f, g); });
    if (!duplicate) focals.push_back(f);
  }
  if (focals.empty()) throw SolverFailure("no positive focal length satisfies the angle constraint");
  return focals;
}

std::vector<PanTiltCandidate> pan_tilt_candidates(const CameraBase& base, double focal_length,
                                                  const Correspondence& corr) {
  if (!(focal_length > 0.0)) throw InvalidArgument("focal_length must be positive");
  Eigen::Vector3d xyz = base.base_rotation * (corr.world_point - base.center);
  const double n = xyz.norm();
  if (!(n > 0.0)) throw DegenerateConfiguration("world point coincides with the camera center");
  xyz /= n;
  const double x = xyz.x();
  const double y = xyz.y();
  const double z = xyz.z();
  if (x * x + z * z < 1e-18) throw DegenerateConfiguration("world point lies on the pan axis");

  const double u = (corr.pixel.x() - base.principal_point.x()) / focal_length;
  const double v = (corr.pixel.y() - base.principal_point.y()) / focal_length;
  const double u2 = u * u;
  const double v2 = v * v;

  // a t^2 + b t + c = 0 with t = tan(pan).
  const double qa = (v2 + 1.0) * z * z - u2 * (x * x + y * y);
  const double qb = -2.0 * x * z * (u2 + v2 + 1.0);
  const double qc = (v2 + 1.0) * x * x - u2 * (y * y + z * z);

  std::vector<double> tans;
  const double scale = std::max({std::abs(qa), std::abs(qb), std::abs(qc)});
  if (std::abs(qa) <= 1e-14 * scale) {
    if (std::abs(qb) > 0.0) tans.push_back(-qc / qb);
  } else {
    double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0 && disc >= -1e-12 * scale * scale) disc = 0.0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double qq = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
      if (qq != 0.0) {
        tans.push_back(qq / qa);
        tans.push_back(qc / qq);
      } else {
        tans.push_back(0.0);
      }
    }
  }

  std::vector<PanTiltCandidate> out;
  for (double t : tans) {
    if (!std::isfinite(t)) continue;
    const double pan = std::atan(t);
    const double sp = std::sin(pan);
    const double cp = std::cos(pan);
    const double horiz = sp * x + cp * z;  // (Z c_p + X s_p)
    const double lateral = cp * x - sp * z;  // (X c_p - Z s_p)
    const double denom = y * y + horiz * horiz;
    if (denom <= 0.0) continue;
    double ct;
    double st;
    if (std::abs(u) > kOpticalColumnEpsilon) {
      const double det = u * denom;
      ct = (v * y + horiz) * lateral / det;
      st = (v * horiz - y) * lateral / det;
    } else {
      // Optical column: the depth w follows from |(horiz, y)| = w |(1, v)|.
      const double w = std::sqrt(denom / (1.0 + v2));
      ct = (v * y + horiz) * w / denom;
      st = (v * horiz - y) * w / denom;
    }
    const PanTiltCandidate cand{rad2deg(pan), rad2deg(std::atan2(st, ct)), ct, st};
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const PanTiltCandidate& o) {
      return std::abs(o.pan - cand.pan) < 1e-12 && std::abs(o.tilt - cand.tilt) < 1e-12;
    });
    if (!duplicate) out.push_back(cand);
  }
  return out;
}

std::vector<PtzParams> pan_tilt_from_one_point(const CameraBase& base, double focal_length,
                                               const Correspondence& corr) {
  const auto candidates = pan_tilt_candidates(base, focal_length, corr);
  std::vector<std::pair<double, PtzParams>> scored;
  for (const auto& c : candidates) {
    const PtzParams ptz{c.pan, c.tilt, focal_length};
    const auto pixel = project_point({base, ptz}, corr.world_point);
    if (!pixel) continue;
    const double err = (*pixel - corr.pixel).norm();
    if (err <= kCandidateReprojection) scored.emplace_back(err, ptz);
  }
  if (scored.empty()) throw SolverFailure("no pan/tilt solution reprojects the correspondence");
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<PtzParams> out;
  for (const auto& s : scored) out.push_back(s.second);
  return out;
}

double reprojection_rmse(const CameraBase& base, const PtzParams& ptz,
                         std::span<const Correspondence> correspondences) {
  if (correspondences.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : correspondences) {
    const auto pixel = project_point({base, ptz}, c.world_point);
    if (!pixel) return std::numeric_limits<double>::infinity();
    sum += (*pixel - c.pixel).squaredNorm();
  }
  return std::sqrt(sum / correspondences.size());
}

CalibSolution refine_ptz(const CameraBase& base, const PtzParams& init,
                         std::span<const Correspondence> correspondences, const LmOptions& options) {
  if (correspondences.size() < 2) throw InvalidArgument("refine_ptz needs at least two correspondences");
  init.validate();
  if (!(std::abs(init.pan) < 90.0)) throw InvalidArgument("initial pan outside (-90, 90)");

  auto residuals = [&](const Eigen::Vector3d& p, Eigen::VectorXd& r) {
    if (!(p[2] > 0.0)) return false;
    const PtzCamera cam{base, {p[0], p[1], p[2]}};
    const Eigen::Matrix3d rot = camera_rotation(cam);
    r.resize(2 * static_cast<Eigen::Index>(correspondences.size()));
    for (std::size_t i = 0; i < correspondences.size(); ++i) {
      const Eigen::Vector3d in_cam = rot * (correspondences[i].world_point - base.center);
      if (in_cam.z() <= 0.0) return false;
      r[2 * i] = correspondences[i].pixel.x() - (p[2] * in_cam.x() / in_cam.z() + base.principal_point.x());
      r[2 * i + 1] = correspondences[i].pixel.y() - (p[2] * in_cam.y() / in_cam.z() + base.principal_point.y());
    }
    return true;
  };

  const Eigen::Vector3d x0(init.pan, init.tilt, init.focal_length);
  const auto lm = levenberg_marquardt<3>(residuals, x0, Eigen::Vector3d(1e-6, 1e-6, 1e-3), options);
  CalibSolution sol;
  sol.ptz = {wrap_degrees(lm.params[0]), wrap_degrees(lm.params[1]), lm.params[2]};
  sol.converged = lm.converged;
  sol.reprojection_rmse = std::sqrt(lm.final_cost / correspondences.size());
  return sol;
}

CalibSolution calibrate_two_points(const TwoPointProblem& problem) {
  const auto focals = focal_from_two_points(problem);
  const Correspondence pair[2] = {problem.corr_a, problem.corr_b};

  bool found = false;
  CalibSolution best;
  for (double f : focals) {
    std::vector<PtzParams> inits;
    try {
      inits = pan_tilt_from_one_point(problem.base, f, problem.corr_a);
    } catch (const SolverFailure&) {
      continue;
    }
    for (const auto& init : inits) {
      if (!(std::abs(init.pan) < 90.0)) continue;
      const CalibSolution sol = refine_ptz(problem.base, init, pair);
      if (!std::isfinite(sol.reprojection_rmse)) continue;
      if (!found || sol.reprojection_rmse < best.reprojection_rmse) {
        best = sol;
        found = true;
      }
    }
  }
  if (!found) throw SolverFailure("no focal/pan-tilt branch produced a calibration");
  return best;
}

}  // namespace ptzcalib
