#include "ptzcalib/pose/pose_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "ptzcalib/core/camera.hpp"
#include "ptzcalib/core/levenberg_marquardt.hpp"
#include "ptzcalib/core/random.hpp"

namespace ptzcalib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Focal lengths f > 0 with atan(o1 / f) - atan(o2 / f) = delta, where o_i are
// pixel offsets along one image axis and delta is in radians. Taking tan of
// both sides gives sin(delta) (f^2 + o1 o2) - cos(delta) (o1 - o2) f = 0.
std::vector<double> focal_from_offsets(double o1, double o2, double delta) {
  const double qa = std::sin(delta);
  const double qb = -std::cos(delta) * (o1 - o2);
  const double qc = std::sin(delta) * o1 * o2;
  std::vector<double> roots;
  if (qa == 0.0) {
    if (qb != 0.0) roots.push_back(-qc / qb);
  } else {
    double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0 && disc > -1e-12 * qb * qb) disc = 0.0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
      if (q != 0.0) {
        roots.push_back(q / qa);
        roots.push_back(qc / q);
      } else {
        roots.push_back(0.0);
      }
    }
  }
  std::vector<double> out;
  for (double f : roots) {
    if (!(f > 0.0) || !std::isfinite(f)) continue;
    if (std::abs(std::atan(o1 / f) - std::atan(o2 / f) - delta) > 1e-6) continue;
    out.push_back(f);
  }
  return out;
}

double squared_pair_error(const PtzParams& ptz, const Eigen::Vector2d& pp, const RayObservation& a,
                          const RayObservation& b) {
  const double ea = ray_reprojection_error(ptz, pp, a);
  const double eb = ray_reprojection_error(ptz, pp, b);
  return ea * ea + eb * eb;
}

struct Consensus {
  std::vector<int> inliers;  // one index per inlier group, ascending
  double sse = kInf;
};

class ConsensusScorer {
 public:
  ConsensusScorer(const CameraBase& base, std::span<const RayObservation> obs, double threshold)
      : pp_(base.principal_point), obs_(obs), threshold_(threshold) {
    std::map<std::pair<double, double>, int> ids;
    group_.resize(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto key = std::make_pair(obs[i].pixel.x(), obs[i].pixel.y());
      const auto [it, inserted] = ids.emplace(key, static_cast<int>(ids.size()));
      group_[i] = it->second;
    }
    group_count_ = static_cast<int>(ids.size());
  }

  int group_count() const { return group_count_; }
  int group(std::size_t i) const { return group_[i]; }

  Consensus score(const PtzParams& ptz) const {
    std::vector<int> best(group_count_, -1);
    std::vector<double> best_err(group_count_, kInf);
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      const double e = ray_reprojection_error(ptz, pp_, obs_[i]);
      if (e <= threshold_ && e < best_err[group_[i]]) {
        best_err[group_[i]] = e;
        best[group_[i]] = static_cast<int>(i);
      }
    }
    Consensus c;
    c.sse = 0.0;
    for (int g = 0; g < group_count_; ++g) {
      if (best[g] < 0) continue;
      c.inliers.push_back(best[g]);
      c.sse += best_err[g] * best_err[g];
    }
    std::sort(c.inliers.begin(), c.inliers.end());
    return c;
  }

 private:
  Eigen::Vector2d pp_;
  std::span<const RayObservation> obs_;
  double threshold_;
  std::vector<int> group_;
  int group_count_ = 0;
};

bool better(const Consensus& a, const Consensus& b) {
  if (a.inliers.size() != b.inliers.size()) return a.inliers.size() > b.inliers.size();
  return a.sse < b.sse;
}

PtzParams refine_on(const CameraBase& base, std::span<const RayObservation> obs, const std::vector<int>& subset,
                    const PtzParams& init) {
  if (subset.size() < 2) return init;
  const Eigen::Vector2d pp = base.principal_point;
  auto residuals = [&](const Eigen::Vector3d& p, Eigen::VectorXd& r) {
    if (!(p[2] > 0.0)) return false;
    const PtzParams ptz{p[0], p[1], p[2]};
    r.resize(2 * static_cast<Eigen::Index>(subset.size()));
    for (std::size_t k = 0; k < subset.size(); ++k) {
      const auto pixel = try_project_ray(ptz, pp, obs[subset[k]].ray);
      if (!pixel) return false;
      r.segment<2>(2 * k) = obs[subset[k]].pixel - *pixel;
    }
    return true;
  };
  const auto lm = levenberg_marquardt<3>(residuals, Eigen::Vector3d(init.pan, init.tilt, init.focal_length),
                                         Eigen::Vector3d(1e-6, 1e-6, 1e-3));
  return {lm.params[0], lm.params[1], lm.params[2]};
}

}  // namespace

void RansacConfig::validate() const {
  if (!(success_probability > 0.0 && success_probability < 1.0)) {
    throw InvalidArgument("success_probability must be in (0, 1)");
  }
  if (!(outlier_ratio >= 0.0 && outlier_ratio < 1.0)) throw InvalidArgument("outlier_ratio must be in [0, 1)");
  if (!(inlier_threshold > 0.0)) throw InvalidArgument("inlier_threshold must be positive");
  if (max_iterations && *max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
  if (min_inliers < 2) throw InvalidArgument("min_inliers must be >= 2");
}

int ransac_iterations(int min_set_size, const RansacConfig& config) {
  if (min_set_size < 1) throw InvalidArgument("min_set_size must be >= 1");
  config.validate();
  const double all_inlier = std::pow(1.0 - config.outlier_ratio, min_set_size);
  if (all_inlier >= 1.0) return 1;
  const double n = std::log(1.0 - config.success_probability) / std::log(1.0 - all_inlier);
  return std::max(1, static_cast<int>(std::lround(n)));
}

double ray_reprojection_error(const PtzParams& ptz, const Eigen::Vector2d& principal_point,
                              const RayObservation& obs) {
  const auto pixel = try_project_ray(ptz, principal_point, obs.ray);
  if (!pixel) return kInf;
  return (*pixel - obs.pixel).norm();
}

PtzParams fit_ptz_minimal(const CameraBase& base, const RayObservation& a, const RayObservation& b) {
  const Eigen::Vector2d pp = base.principal_point;
  const double dpan = a.ray.pan - b.ray.pan;
  const double dtilt = a.ray.tilt - b.ray.tilt;
  if (std::abs(dpan) < 1e-12 && std::abs(dtilt) < 1e-12) throw DegenerateConfiguration("identical rays");
  const Eigen::Vector2d ca = a.pixel - pp;
  const Eigen::Vector2d cb = b.pixel - pp;
  const double sep_x = std::abs(ca.x() - cb.x());
  const double sep_y = std::abs(ca.y() - cb.y());
  if (sep_x < 1e-9 && sep_y < 1e-9) throw DegenerateConfiguration("coincident pixels");

  // x_i - u = f tan(pan_i - pan): atan(cx_a / f) - atan(cx_b / f) = pan_a - pan_b.
  // y_i - v = f tan(tilt - tilt_i): atan(cy_a / f) - atan(cy_b / f) = tilt_b - tilt_a.
  auto from_x = [&] { return focal_from_offsets(ca.x(), cb.x(), deg2rad(dpan)); };
  auto from_y = [&] { return focal_from_offsets(ca.y(), cb.y(), deg2rad(-dtilt)); };
  std::vector<double> focals;
  const bool x_first = sep_x >= sep_y;
  if (x_first ? sep_x >= 1e-9 : sep_y >= 1e-9) focals = x_first ? from_x() : from_y();
  if (focals.empty()) {
    const bool other_ok = x_first ? sep_y >= 1e-9 : sep_x >= 1e-9;
    if (other_ok) focals = x_first ? from_y() : from_x();
  }
  if (focals.empty()) throw SolverFailure("no positive focal length fits the observation pair");

  bool found = false;
  PtzParams best;
  double best_err = kInf;
  for (double f : focals) {
    const double pan = 0.5 * ((a.ray.pan - rad2deg(std::atan(ca.x() / f))) + (b.ray.pan - rad2deg(std::atan(cb.x() / f))));
    const double tilt =
        0.5 * ((a.ray.tilt + rad2deg(std::atan(ca.y() / f))) + (b.ray.tilt + rad2deg(std::atan(cb.y() / f))));
    const PtzParams ptz{pan, tilt, f};
    const double err = squared_pair_error(ptz, pp, a, b);
    if (!found || err < best_err) {
      best = ptz;
      best_err = err;
      found = true;
    }
  }
  return best;
}

PoseEstimate estimate_pose(const CameraBase& base, std::span<const RayObservation> observations,
                           const RansacConfig& config, const std::optional<PtzParams>& init_hint) {
  config.validate();
  using Reason = EstimationFailure::Reason;
  const ConsensusScorer scorer(base, observations, config.inlier_threshold);
  if (observations.size() < 2 || scorer.group_count() < 2) {
    throw EstimationFailure(Reason::TooFewObservations, 0, "fewer than two distinct observations");
  }

  const int iterations = config.max_iterations.value_or(ransac_iterations(2, config));
  Rng rng(mix_seed({config.seed, 0x5a5aULL}));
  std::uniform_int_distribution<std::size_t> pick(0, observations.size() - 1);

  bool have = false;
  PtzParams best_ptz;
  Consensus best;
  if (init_hint) {
    best = scorer.score(*init_hint);
    best_ptz = *init_hint;
    have = true;
  }
  int used = 0;
  for (int it = 0; it < iterations; ++it) {
    if (have && static_cast<int>(best.inliers.size()) == scorer.group_count()) break;
    ++used;
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    for (int attempt = 0; attempt < 64 && scorer.group(j) == scorer.group(i); ++attempt) j = pick(rng);
    if (scorer.group(j) == scorer.group(i)) continue;
    PtzParams hypothesis;
    try {
      hypothesis = fit_ptz_minimal(base, observations[i], observations[j]);
    } catch (const Error&) {
      continue;
    }
    const Consensus c = scorer.score(hypothesis);
    if (!have || better(c, best)) {
      best = c;
      best_ptz = hypothesis;
      have = true;
    }
  }
  const int best_count = have ? static_cast<int>(best.inliers.size()) : 0;
  if (best_count < 2) {
    throw EstimationFailure(Reason::NoConsensus, best_count, "RANSAC found no consensus");
  }

  PtzParams ptz = refine_on(base, observations, best.inliers, best_ptz);
  Consensus refined = scorer.score(ptz);
  if (refined.inliers.size() >= 2) {
    ptz = refine_on(base, observations, refined.inliers, ptz);
    refined = scorer.score(ptz);
  }
  if (better(best, refined)) {
    // Refinement lost support; keep the hypothesis.
    ptz = best_ptz;
    refined = best;
  }
  const int count = static_cast<int>(refined.inliers.size());
  if (count < config.min_inliers) {
    throw EstimationFailure(Reason::NoConsensus, std::max(count, best_count),
                            "consensus of " + std::to_string(count) + " below min_inliers " +
                                std::to_string(config.min_inliers));
  }

  PoseEstimate out;
  out.ptz = ptz;
  out.inlier_indices = refined.inliers;
  out.reprojection_rmse = std::sqrt(refined.sse / count);
  out.iterations_used = used;
  return out;
}

std::vector<RayObservation> predict_observations(const PanTiltForest& forest, std::span<const Keypoint> keypoints,
                                                 std::optional<double> distance_threshold) {
  std::vector<RayObservation> obs;
  for (const auto& kp : keypoints) {
    for (const auto& p : predict_ray(forest, kp.descriptor, distance_threshold)) {
      obs.push_back({kp.pixel, p.ray, p.feature_distance});
    }
  }
  return obs;
}

PoseEstimate calibrate_image(const CameraBase& base, const PanTiltForest& forest, std::span<const Keypoint> keypoints,
                             const RansacConfig& config, std::optional<double> distance_threshold) {
  using Reason = EstimationFailure::Reason;
  if (keypoints.size() < 2) throw EstimationFailure(Reason::TooFewObservations, 0, "fewer than two keypoints");
  const auto obs = predict_observations(forest, keypoints, distance_threshold);
  std::size_t pixels_kept = 0;
  {
    std::vector<std::pair<double, double>> seen;
    for (const auto& o : obs) seen.emplace_back(o.pixel.x(), o.pixel.y());
    std::sort(seen.begin(), seen.end());
    pixels_kept = std::unique(seen.begin(), seen.end()) - seen.begin();
  }
  if (pixels_kept < 2) {
    throw EstimationFailure(Reason::GatingRemovedAll, 0,
                            "feature-distance gating left " + std::to_string(pixels_kept) + " keypoints");
  }
  return estimate_pose(base, obs, config);
}

void write_observations(std::ostream& out, std::span<const RayObservation> observations) {
  out << "# x y pan tilt feature_distance\n";
  char buf[160];
  for (const auto& o : observations) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g\n", o.pixel.x(), o.pixel.y(), o.ray.pan,
                  o.ray.tilt, o.feature_distance);
    out << buf;
  }
}

std::vector<RayObservation> read_observations(std::istream& in) {
  std::vector<RayObservation> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    RayObservation o;
    double x;
    double y;
    if (!(ss >> x >> y >> o.ray.pan >> o.ray.tilt >> o.feature_distance)) {
      throw ParseError("observation line " + std::to_string(line_no) + ": expected 5 numbers");
    }
    std::string extra;
    if (ss >> extra) throw ParseError("observation line " + std::to_string(line_no) + ": trailing data");
    o.pixel = {x, y};
    out.push_back(o);
  }
  return out;
}

}  // namespace ptzcalib
