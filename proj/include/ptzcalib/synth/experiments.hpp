#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ptzcalib/forest/pan_tilt_forest.hpp"
#include "ptzcalib/pose/pose_estimator.hpp"
#include "ptzcalib/synth/config.hpp"
#include "ptzcalib/synth/metrics.hpp"
#include "ptzcalib/synth/scene.hpp"

namespace ptzcalib {

struct SweepRow {
  double level = 0.0;
  double mean_rot_err_deg = 0.0;
  double std_rot_err_deg = 0.0;
  double mean_focal_err_px = 0.0;
  double std_focal_err_px = 0.0;
  double mean_iou = 0.0;
  int fail_count = 0;
  int trials = 0;
};

struct SweepResult {
  /// Name of the swept quantity: "sigma", "location_m" or "rotation_deg".
  std::string parameter;
  std::vector<SweepRow> rows;
};

/// Pixel-noise sweep. Each (camera, trial) draws rays_per_view rays inside
/// the view, projects them, adds N(0, sigma^2) to both pixel coordinates and
/// runs two-point RANSAC on the exact ray labels.
SweepResult run_noise_sweep(const SyntheticScene& scene, const ExperimentConfig& config);

enum class BaseMode { Location, Rotation };

/// Estimation with a perturbed camera base: pixels come from the true base,
/// ray labels from the believed one. Location perturbs C by N(0, s^2) per
/// axis (meters); rotation turns S about a random axis by N(0, s^2) degrees.
SweepResult run_base_uncertainty_sweep(const SyntheticScene& scene, const ExperimentConfig& config, BaseMode mode);

/// Per-trial result of one sweep level, in trial order (camera-major).
struct TrialOutcome {
  bool failed = false;
  EvalResult eval;
};
std::vector<TrialOutcome> run_noise_trials(const SyntheticScene& scene, const ExperimentConfig& config, double sigma);
std::vector<TrialOutcome> run_base_trials(const SyntheticScene& scene, const ExperimentConfig& config, BaseMode mode,
                                          double level);
SweepRow summarize(double level, const std::vector<TrialOutcome>& outcomes);

// Forest pipeline.

/// Keypoints of a synthetic image: every visible bank ray, with an
/// appearance-oracle descriptor.
struct SyntheticView {
  PtzParams ptz;
  std::vector<Keypoint> keypoints;
  std::vector<int> bank_index;
  std::vector<char> outlier;
};

SyntheticView render_view(const SyntheticScene& scene, const PtzParams& ptz, double appearance_sigma,
                          double outlier_prob, std::uint64_t seed, int descriptor_dim);

/// reference_pans x reference_tilts grid over the pan/tilt ranges at
/// reference_focal.
std::vector<PtzParams> reference_poses(const ExperimentConfig& config);

/// Labeled keypoints of every reference view.
std::vector<TrainingSample> build_training_set(const SyntheticScene& scene, const ExperimentConfig& config);

ForestConfig forest_config(const ExperimentConfig& config);

std::vector<PtzParams> sample_query_poses(const ExperimentConfig& config, int count, const Range& focal_range,
                                          std::uint64_t stream);

struct GatingReport {
  double gated_inlier_rate = 0.0;
  double ungated_inlier_rate = 0.0;
  long gated_predictions = 0;
  long ungated_predictions = 0;
};

/// Fraction of per-tree predictions within max_error_deg (angle between
/// directions) of the keypoint's true ray, with and without gating.
GatingReport evaluate_gating(const PanTiltForest& forest, const SyntheticScene& scene,
                             const std::vector<SyntheticView>& views, double max_error_deg = 0.5);

struct QueryResult {
  PtzParams gt;
  std::optional<PtzParams> estimate;
  double iou = 0.0;
  double fov_deg = 0.0;
  int inliers = 0;
  std::string failure;
};

std::vector<SyntheticView> render_query_views(const SyntheticScene& scene, const ExperimentConfig& config,
                                              const std::vector<PtzParams>& poses, std::uint64_t stream);

std::vector<QueryResult> run_forest_queries(const PanTiltForest& forest, const SyntheticScene& scene,
                                            const ExperimentConfig& config, const std::vector<SyntheticView>& views);

struct ForestExperimentResult {
  GatingReport gating;
  std::vector<QueryResult> queries;
  double mean_iou = 0.0;
};

/// Scene with forest_bank_size rays, forest trained on the reference
/// views, query_poses held-out random poses with outlier_prob outliers.
ForestExperimentResult run_forest_experiment(const ExperimentConfig& config);

/// Forest queries with focal lengths from fov_focal_range, one row per query.
std::vector<QueryResult> run_fov_report(const PanTiltForest& forest, const SyntheticScene& scene,
                                        const ExperimentConfig& config);

enum class OutputFormat { Table, Csv, JsonLike };

OutputFormat parse_output_format(const std::string& name);
void write_sweep(std::ostream& out, const SweepResult& sweep, OutputFormat format);
void write_fov_report(std::ostream& out, const std::vector<QueryResult>& rows, OutputFormat format);

}  // namespace ptzcalib
