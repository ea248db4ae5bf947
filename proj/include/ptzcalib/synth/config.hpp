#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"

namespace ptzcalib {

struct Range {
  double min = 0.0;
  double max = 0.0;

  double span() const { return max - min; }
};

struct ExperimentConfig {
  Range pan_range{15.0, 75.0};       // degrees
  Range tilt_range{-14.0, -5.0};     // degrees
  Range focal_range{1500.0, 5000.0};  // pixels

  std::vector<double> noise_levels{0.5, 1.0, 2.0, 3.0};        // pixels
  std::vector<double> location_levels{0.1, 0.25, 0.5, 1.0};    // meters
  std::vector<double> rotation_levels{0.05, 0.1, 0.5, 1.0};    // degrees

  int cameras_count = 20;
  int trials_per_camera = 20;
  int rays_per_view = 200;
  double fraction_off_field = 0.9;
  int bank_size = 200;
  std::uint64_t seed = 0;

  double inlier_threshold = 3.0;  // px
  /// Noise-sweep threshold: max(inlier_threshold, noise_threshold_scale * sigma).
  double noise_threshold_scale = 3.035;
  int min_inliers = 8;

  // Forest pipeline.
  int forest_bank_size = 3000;
  int reference_pans = 10;
  int reference_tilts = 2;
  double reference_focal = 1500.0;
  int query_poses = 50;
  double appearance_sigma = 0.02;
  double outlier_prob = 0.5;
  int descriptor_dim = 128;
  int tree_count = 5;
  int max_depth = 40;
  int min_samples = 5;
  int candidates_per_node = 64;
  double threshold_quantile = 0.9;
  std::optional<double> feature_distance_threshold;

  // fov-report queries sample the focal length from this range.
  Range fov_focal_range{900.0, 5000.0};
  int fov_queries = 100;

  /// Worker threads, 0 = hardware concurrency. Results do not depend on it.
  unsigned workers = 0;

  /// Throws InvalidArgument on empty ranges or non-positive counts.
  void validate() const;

  /// 100 cameras x 100 trials.
  ExperimentConfig full_scale() const;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys and wrong types throw
/// ParseError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);

}  // namespace ptzcalib
