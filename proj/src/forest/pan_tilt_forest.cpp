#include "ptzcalib/forest/pan_tilt_forest.hpp"

#include <algorithm>
#include <cmath>

#include "ptzcalib/core/camera.hpp"
#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/core/parallel.hpp"
#include "ptzcalib/core/random.hpp"

namespace ptzcalib {

namespace {

constexpr double kMinThreshold = 1e-12;

class TreeBuilder {
 public:
  TreeBuilder(std::span<const TrainingSample> samples, const ForestConfig& config, std::uint64_t seed)
      : samples_(samples), config_(config), rng_(seed), dim_(static_cast<int>(samples[0].descriptor.size())) {}

  PanTiltTree build(std::vector<int> in_bag) {
    tree_.in_bag = in_bag;
    grow(std::move(in_bag), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<int> indices, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[id].depth = depth;
    const int n = static_cast<int>(indices.size());
    if (depth >= config_.max_depth || n < config_.min_samples) {
      make_leaf(id, indices);
      return id;
    }

    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (int i : indices) mean += Eigen::Vector2d(samples_[i].ray.pan, samples_[i].ray.tilt);
    mean /= n;
    double parent_sse = 0.0;
    std::vector<Eigen::Vector2d> centered(n);
    for (int k = 0; k < n; ++k) {
      const auto& r = samples_[indices[k]].ray;
      centered[k] = Eigen::Vector2d(r.pan, r.tilt) - mean;
      parent_sse += centered[k].squaredNorm();
    }
    if (!(parent_sse > 0.0)) {
      make_leaf(id, indices);
      return id;
    }

    std::uniform_int_distribution<int> pick_feature(0, dim_ - 1);
    SplitParam best;
    double best_gain = 0.0;
    bool have_best = false;
    std::vector<SplitParam> candidates;
    std::vector<double> gains;
    for (int c = 0; c < config_.candidates_per_node; ++c) {
      const int feature = pick_feature(rng_);
      double lo = samples_[indices[0]].descriptor[feature];
      double hi = lo;
      for (int i : indices) {
        lo = std::min(lo, samples_[i].descriptor[feature]);
        hi = std::max(hi, samples_[i].descriptor[feature]);
      }
      const double threshold = std::uniform_real_distribution<double>(lo, hi)(rng_);
      const SplitParam split{feature, threshold};

      Eigen::Vector2d sum_left = Eigen::Vector2d::Zero();
      Eigen::Vector2d sum_right = Eigen::Vector2d::Zero();
      int n_left = 0;
      for (int k = 0; k < n; ++k) {
        if (samples_[indices[k]].descriptor[feature] < threshold) {
          sum_left += centered[k];
          ++n_left;
        } else {
          sum_right += centered[k];
        }
      }
      const int n_right = n - n_left;
      double gain = 0.0;
      if (n_left > 0 && n_right > 0) {
        // SSE_parent - SSE_left - SSE_right on centered values.
        gain = sum_left.squaredNorm() / n_left + sum_right.squaredNorm() / n_right;
      }
      if (config_.record_candidates) {
        candidates.push_back(split);
        gains.push_back(gain);
      }
      if (n_left > 0 && n_right > 0 && (!have_best || gain > best_gain)) {
        best = split;
        best_gain = gain;
        have_best = true;
      }
    }
    tree_.nodes[id].candidates = std::move(candidates);
    tree_.nodes[id].candidate_gains = std::move(gains);

    if (!have_best || !(best_gain > 1e-12 * parent_sse)) {
      make_leaf(id, indices);
      return id;
    }

    std::vector<int> left;
    std::vector<int> right;
    for (int i : indices) {
      (samples_[i].descriptor[best.feature_index] < best.threshold ? left : right).push_back(i);
    }
    indices.clear();
    indices.shrink_to_fit();
    tree_.nodes[id].split = best;
    tree_.nodes[id].gain = best_gain;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  void make_leaf(int id, const std::vector<int>& indices) {
    TreeNode& node = tree_.nodes[id];
    node.left = node.right = -1;
    node.sample_count = static_cast<int>(indices.size());
    Descriptor sum = Descriptor::Zero(dim_);
    double pan = 0.0;
    double tilt = 0.0;
    for (int i : indices) {
      sum += samples_[i].descriptor;
      pan += samples_[i].ray.pan;
      tilt += samples_[i].ray.tilt;
    }
    const double n = static_cast<double>(indices.size());
    node.mean_descriptor = sum / n;
    node.mean_ray = {pan / n, tilt / n};
  }

  std::span<const TrainingSample> samples_;
  const ForestConfig& config_;
  Rng rng_;
  int dim_;
  PanTiltTree tree_;
};

double calibrate_threshold(const PanTiltForest& forest, std::span<const TrainingSample> samples, double quantile) {
  std::vector<double> distances;
  const std::size_t n = samples.size();
  for (const auto& tree : forest.trees) {
    std::vector<char> in_bag(n, 0);
    for (int i : tree.in_bag) in_bag[i] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      const auto& leaf = tree.nodes[tree.leaf_index(samples[i].descriptor)];
      distances.push_back((leaf.mean_descriptor - samples[i].descriptor).squaredNorm());
    }
  }
  if (distances.empty()) {
    for (const auto& tree : forest.trees) {
      for (int i : tree.in_bag) {
        const auto& leaf = tree.nodes[tree.leaf_index(samples[i].descriptor)];
        distances.push_back((leaf.mean_descriptor - samples[i].descriptor).squaredNorm());
      }
    }
  }
  std::sort(distances.begin(), distances.end());
  const auto k = static_cast<std::size_t>(
      std::clamp<double>(std::ceil(quantile * distances.size()) - 1.0, 0.0, distances.size() - 1.0));
  return std::max(distances[k], kMinThreshold);
}

}  // namespace

void ForestConfig::validate() const {
  if (tree_count < 1) throw InvalidArgument("tree_count must be >= 1");
  if (max_depth < 0) throw InvalidArgument("max_depth must be >= 0");
  if (min_samples < 1) throw InvalidArgument("min_samples must be >= 1");
  if (candidates_per_node < 1) throw InvalidArgument("candidates_per_node must be >= 1");
  if (!(threshold_quantile > 0.0 && threshold_quantile <= 1.0)) {
    throw InvalidArgument("threshold_quantile must be in (0, 1]");
  }
  if (feature_distance_threshold && !(*feature_distance_threshold > 0.0)) {
    throw InvalidArgument("feature_distance_threshold must be positive");
  }
}

int PanTiltTree::leaf_index(const Descriptor& d) const {
  int id = 0;
  while (!nodes[id].is_leaf()) {
    const TreeNode& node = nodes[id];
    id = d[node.split.feature_index] < node.split.threshold ? node.left : node.right;
  }
  return id;
}

int PanTiltTree::depth() const {
  int depth = 0;
  for (const auto& n : nodes) depth = std::max(depth, n.depth);
  return depth;
}

int PanTiltTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double ray_sse(std::span<const TrainingSample> samples, std::span<const int> indices) {
  if (indices.empty()) return 0.0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (int i : indices) mean += Eigen::Vector2d(samples[i].ray.pan, samples[i].ray.tilt);
  mean /= static_cast<double>(indices.size());
  double sse = 0.0;
  for (int i : indices) sse += (Eigen::Vector2d(samples[i].ray.pan, samples[i].ray.tilt) - mean).squaredNorm();
  return sse;
}

double split_gain(std::span<const TrainingSample> samples, std::span<const int> indices, const SplitParam& split) {
  std::vector<int> left;
  std::vector<int> right;
  for (int i : indices) {
    (samples[i].descriptor[split.feature_index] < split.threshold ? left : right).push_back(i);
  }
  return ray_sse(samples, indices) - ray_sse(samples, left) - ray_sse(samples, right);
}

PanTiltForest train_forest(std::span<const TrainingSample> samples, const ForestConfig& config) {
  config.validate();
  if (samples.empty()) throw InvalidArgument("empty training set");
  if (static_cast<int>(samples.size()) < config.min_samples) {
    throw InvalidArgument("training set smaller than min_samples");
  }
  const Eigen::Index dim = samples[0].descriptor.size();
  if (dim == 0) throw InvalidArgument("empty descriptor");
  for (const auto& s : samples) {
    if (s.descriptor.size() != dim) throw InvalidArgument("inconsistent descriptor dimension");
    if (!s.descriptor.allFinite() || !std::isfinite(s.ray.pan) || !std::isfinite(s.ray.tilt)) {
      throw InvalidArgument("non-finite training sample");
    }
  }

  PanTiltForest forest;
  forest.config = config;
  forest.dimension = static_cast<int>(dim);
  forest.trees.resize(config.tree_count);
  const int n = static_cast<int>(samples.size());
  parallel_for(
      forest.trees.size(),
      [&](std::size_t t) {
        const std::uint64_t seed = mix_seed({config.seed, static_cast<std::uint64_t>(t)});
        std::vector<int> in_bag(n);
        if (config.bootstrap) {
          Rng bag_rng(mix_seed({seed, 0xba99ULL}));
          std::uniform_int_distribution<int> pick(0, n - 1);
          for (int& i : in_bag) i = pick(bag_rng);
          std::sort(in_bag.begin(), in_bag.end());
        } else {
          for (int i = 0; i < n; ++i) in_bag[i] = i;
        }
        forest.trees[t] = TreeBuilder(samples, config, seed).build(std::move(in_bag));
      },
      config.workers);

  forest.feature_distance_threshold = config.feature_distance_threshold
                                          ? *config.feature_distance_threshold
                                          : calibrate_threshold(forest, samples, config.threshold_quantile);
  return forest;
}

std::vector<RayPrediction> predict_ray(const PanTiltForest& forest, const Descriptor& d,
                                       std::optional<double> threshold) {
  if (d.size() != forest.dimension) throw InvalidArgument("descriptor dimension does not match the forest");
  const double gate = threshold.value_or(forest.feature_distance_threshold);
  std::vector<RayPrediction> out;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const auto& tree = forest.trees[t];
    const auto& leaf = tree.nodes[tree.leaf_index(d)];
    const double dist = (leaf.mean_descriptor - d).squaredNorm();
    if (dist <= gate) out.push_back({leaf.mean_ray, dist, static_cast<int>(t)});
  }
  return out;
}

std::vector<TrainingSample> label_keypoints(const PtzParams& ptz, const Eigen::Vector2d& principal_point,
                                            std::span<const Keypoint> keypoints) {
  std::vector<TrainingSample> out;
  out.reserve(keypoints.size());
  for (const auto& kp : keypoints) out.push_back({kp.descriptor, pixel_to_ray(ptz, principal_point, kp.pixel)});
  return out;
}

}  // namespace ptzcalib
