#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ptzcalib/core/types.hpp"

namespace ptzcalib {

using Descriptor = Eigen::VectorXd;

struct TrainingSample {
  Descriptor descriptor;
  Ray ray;
};

struct Keypoint {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  Descriptor descriptor;
};

struct ForestConfig {
  int tree_count = 5;
  int max_depth = 20;
  int min_samples = 5;
  int candidates_per_node = 64;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  /// Quantile of out-of-bag leaf distances used when no threshold is given.
  double threshold_quantile = 0.9;
  std::optional<double> feature_distance_threshold;
  /// Keep every sampled split candidate and its gain on the nodes (testing).
  bool record_candidates = false;
  /// Training threads; 0 = hardware concurrency.
  unsigned workers = 0;

  void validate() const;
};

/// Samples with descriptor[feature_index] < threshold go left.
struct SplitParam {
  int feature_index = 0;
  double threshold = 0.0;
};

struct TreeNode {
  int left = -1;
  int right = -1;
  SplitParam split;
  double gain = 0.0;
  // Leaf payload.
  Descriptor mean_descriptor;
  Ray mean_ray;
  int sample_count = 0;
  int depth = 0;
  // Filled only with ForestConfig::record_candidates.
  std::vector<SplitParam> candidates;
  std::vector<double> candidate_gains;

  bool is_leaf() const { return left < 0; }
};

struct PanTiltTree {
  /// Pre-order node array; nodes[0] is the root.
  std::vector<TreeNode> nodes;
  /// Sorted training-sample indices used to grow the tree, repeats included.
  /// Empty after deserialization.
  std::vector<int> in_bag;

  int leaf_index(const Descriptor& d) const;
  int depth() const;
  int leaf_count() const;
};

struct PanTiltForest {
  std::vector<PanTiltTree> trees;
  double feature_distance_threshold = 0.0;
  int dimension = 0;
  ForestConfig config;
};

struct RayPrediction {
  Ray ray;
  double feature_distance = 0.0;
  int tree = 0;
};

/// Sum of squared deviations of (pan, tilt) about their mean, in degrees^2.
double ray_sse(std::span<const TrainingSample> samples, std::span<const int> indices);

/// Variance-reduction gain SSE(parent) - SSE(left) - SSE(right) of a split.
double split_gain(std::span<const TrainingSample> samples, std::span<const int> indices,
                  const SplitParam& split);

/// Throws InvalidArgument for an empty set, fewer than min_samples samples,
/// inconsistent or empty descriptors, or non-finite values.
PanTiltForest train_forest(std::span<const TrainingSample> samples, const ForestConfig& config);

/// One prediction per tree whose leaf mean is within the threshold
/// (squared distance). Passing a threshold overrides the forest's value;
/// +inf disables gating.
std::vector<RayPrediction> predict_ray(const PanTiltForest& forest, const Descriptor& d,
                                       std::optional<double> threshold = std::nullopt);

std::vector<TrainingSample> label_keypoints(const PtzParams& ptz, const Eigen::Vector2d& principal_point,
                                            std::span<const Keypoint> keypoints);

// Binary forest file, little-endian:
//   "PTZF" u32 version
//   config: i32 tree_count, max_depth, min_samples, candidates_per_node,
//           u8 bootstrap, u64 seed, f64 threshold_quantile
//   u32 dimension, f64 feature_distance_threshold, u32 tree count
//   per tree: u32 node count, per node u8 kind
//     kind 0 (split): i32 feature, f64 threshold, i32 left, i32 right
//     kind 1 (leaf):  i32 sample_count, f64 pan, f64 tilt, f64 x dimension
//   u64 FNV-1a hash of every preceding byte
inline constexpr std::uint32_t kForestFormatVersion = 1;

std::string serialize_forest(const PanTiltForest& forest);
/// Throws ParseError on empty, truncated, corrupted or wrong-version input.
PanTiltForest deserialize_forest(std::string_view bytes);

void save_forest(const std::string& path, const PanTiltForest& forest);
PanTiltForest load_forest(const std::string& path);

}  // namespace ptzcalib
