#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/core/types.hpp"
#include "ptzcalib/forest/pan_tilt_forest.hpp"

namespace ptzcalib {

struct RayObservation {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  Ray ray;
  double feature_distance = 0.0;
};

struct RansacConfig {
  double success_probability = 0.99;
  double outlier_ratio = 0.5;
  double inlier_threshold = 3.0;  // px
  std::optional<int> max_iterations;
  int min_inliers = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PoseEstimate {
  PtzParams ptz;
  std::vector<int> inlier_indices;
  double reprojection_rmse = 0.0;
  int iterations_used = 0;
};

class EstimationFailure : public Error {
 public:
  enum class Reason { TooFewObservations, GatingRemovedAll, NoConsensus };

  EstimationFailure(Reason reason, int best_inlier_count, const std::string& message)
      : Error(message), reason_(reason), best_inlier_count_(best_inlier_count) {}

  Reason reason() const { return reason_; }
  int best_inlier_count() const { return best_inlier_count_; }

 private:
  Reason reason_;
  int best_inlier_count_;
};

/// round(log(1 - p) / log(1 - (1 - eps)^s)), at least 1.
int ransac_iterations(int min_set_size, const RansacConfig& config);

/// (pan, tilt, focal) from two pixel/ray pairs. Uses the image axis with the
/// larger pixel separation for the focal length, then averages the angle of
/// the other axis over both observations. Throws DegenerateConfiguration
/// for identical rays or coincident pixels and SolverFailure when no
/// positive focal length fits.
PtzParams fit_ptz_minimal(const CameraBase& base, const RayObservation& a, const RayObservation& b);

/// Reprojection error |pixel - project_ray(ptz, ray)|, +inf outside the
/// projectable hemisphere.
double ray_reprojection_error(const PtzParams& ptz, const Eigen::Vector2d& principal_point,
                              const RayObservation& obs);

/// Two-point RANSAC followed by refinement on the consensus set, one
/// re-classification and a second refinement. Observations that share an
/// exact pixel are alternatives: at most one of them, the best fitting, can
/// be an inlier.
PoseEstimate estimate_pose(const CameraBase& base, std::span<const RayObservation> observations,
                           const RansacConfig& config, const std::optional<PtzParams>& init_hint = std::nullopt);

/// Forest prediction for every keypoint, then estimate_pose.
PoseEstimate calibrate_image(const CameraBase& base, const PanTiltForest& forest, std::span<const Keypoint> keypoints,
                             const RansacConfig& config, std::optional<double> distance_threshold = std::nullopt);

std::vector<RayObservation> predict_observations(const PanTiltForest& forest, std::span<const Keypoint> keypoints,
                                                 std::optional<double> distance_threshold = std::nullopt);

// Observation dump: one "x y pan tilt feature_distance" row per observation;
// '#' lines are comments.
void write_observations(std::ostream& out, std::span<const RayObservation> observations);
std::vector<RayObservation> read_observations(std::istream& in);

}  // namespace ptzcalib
