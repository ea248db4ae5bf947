#include "ptzcalib/synth/config.hpp"

#include <cmath>
#include <set>
#include <string>

#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/core/io.hpp"

namespace ptzcalib {

namespace {

using nlohmann::json;

json range_json(const Range& r) { return json::array({r.min, r.max}); }

Range range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("range must be a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

void check_range(const Range& r, const char* name, bool positive) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || !(r.max >= r.min)) {
    throw InvalidArgument(std::string(name) + " must satisfy min <= max");
  }
  if (positive && !(r.min > 0.0)) throw InvalidArgument(std::string(name) + " must be positive");
}

}  // namespace

void ExperimentConfig::validate() const {
  check_range(pan_range, "pan_range", false);
  check_range(tilt_range, "tilt_range", false);
  check_range(focal_range, "focal_range", true);
  check_range(fov_focal_range, "fov_focal_range", true);
  if (pan_range.max - pan_range.min >= 180.0 || tilt_range.min <= -90.0 || tilt_range.max >= 90.0) {
    throw InvalidArgument("pan/tilt ranges exceed the projectable hemisphere");
  }
  for (const auto* levels : {&noise_levels, &location_levels, &rotation_levels}) {
    for (double v : *levels) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("perturbation levels must be finite and >= 0");
    }
  }
  if (cameras_count < 1 || trials_per_camera < 1) throw InvalidArgument("cameras_count and trials must be >= 1");
  if (rays_per_view < 2 || bank_size < 2 || forest_bank_size < 2) throw InvalidArgument("ray counts must be >= 2");
  if (!(fraction_off_field >= 0.0 && fraction_off_field <= 1.0)) {
    throw InvalidArgument("fraction_off_field must be in [0, 1]");
  }
  if (!(inlier_threshold > 0.0) || !(noise_threshold_scale >= 0.0)) throw InvalidArgument("invalid inlier threshold");
  if (min_inliers < 2) throw InvalidArgument("min_inliers must be >= 2");
  if (reference_pans < 1 || reference_tilts < 1 || !(reference_focal > 0.0)) {
    throw InvalidArgument("invalid reference pose grid");
  }
  if (query_poses < 1 || fov_queries < 1) throw InvalidArgument("query counts must be >= 1");
  if (!(appearance_sigma >= 0.0) || !(outlier_prob >= 0.0 && outlier_prob <= 1.0)) {
    throw InvalidArgument("invalid appearance noise");
  }
  if (descriptor_dim < 1 || tree_count < 1 || max_depth < 0 || min_samples < 1 || candidates_per_node < 1) {
    throw InvalidArgument("invalid forest parameters");
  }
  if (feature_distance_threshold && !(*feature_distance_threshold > 0.0)) {
    throw InvalidArgument("feature_distance_threshold must be positive");
  }
}

ExperimentConfig ExperimentConfig::full_scale() const {
  ExperimentConfig c = *this;
  c.cameras_count = 100;
  c.trials_per_camera = 100;
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["pan_range"] = range_json(c.pan_range);
  j["tilt_range"] = range_json(c.tilt_range);
  j["focal_range"] = range_json(c.focal_range);
  j["noise_levels"] = c.noise_levels;
  j["location_levels"] = c.location_levels;
  j["rotation_levels"] = c.rotation_levels;
  j["cameras_count"] = c.cameras_count;
  j["trials_per_camera"] = c.trials_per_camera;
  j["rays_per_view"] = c.rays_per_view;
  j["fraction_off_field"] = c.fraction_off_field;
  j["bank_size"] = c.bank_size;
  j["seed"] = c.seed;
  j["inlier_threshold"] = c.inlier_threshold;
  j["noise_threshold_scale"] = c.noise_threshold_scale;
  j["min_inliers"] = c.min_inliers;
  j["forest_bank_size"] = c.forest_bank_size;
  j["reference_pans"] = c.reference_pans;
  j["reference_tilts"] = c.reference_tilts;
  j["reference_focal"] = c.reference_focal;
  j["query_poses"] = c.query_poses;
  j["appearance_sigma"] = c.appearance_sigma;
  j["outlier_prob"] = c.outlier_prob;
  j["descriptor_dim"] = c.descriptor_dim;
  j["tree_count"] = c.tree_count;
  j["max_depth"] = c.max_depth;
  j["min_samples"] = c.min_samples;
  j["candidates_per_node"] = c.candidates_per_node;
  j["threshold_quantile"] = c.threshold_quantile;
  j["feature_distance_threshold"] = c.feature_distance_threshold ? json(*c.feature_distance_threshold) : json(nullptr);
  j["fov_focal_range"] = range_json(c.fov_focal_range);
  j["fov_queries"] = c.fov_queries;
  j["workers"] = c.workers;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("experiment config must be a JSON object");
  const std::set<std::string> known = [] {
    std::set<std::string> keys;
    const json defaults = config_to_json(ExperimentConfig{});
    for (const auto& [k, v] : defaults.items()) keys.insert(k);
    return keys;
  }();
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ParseError("unknown experiment config key: " + k);
  }
  ExperimentConfig c;
  try {
    auto get = [&](const char* key, auto& out) {
      if (j.contains(key)) j.at(key).get_to(out);
    };
    auto get_range = [&](const char* key, Range& out) {
      if (j.contains(key)) out = range_from(j.at(key));
    };
    get_range("pan_range", c.pan_range);
    get_range("tilt_range", c.tilt_range);
    get_range("focal_range", c.focal_range);
    get("noise_levels", c.noise_levels);
    get("location_levels", c.location_levels);
    get("rotation_levels", c.rotation_levels);
    get("cameras_count", c.cameras_count);
    get("trials_per_camera", c.trials_per_camera);
    get("rays_per_view", c.rays_per_view);
    get("fraction_off_field", c.fraction_off_field);
    get("bank_size", c.bank_size);
    get("seed", c.seed);
    get("inlier_threshold", c.inlier_threshold);
    get("noise_threshold_scale", c.noise_threshold_scale);
    get("min_inliers", c.min_inliers);
    get("forest_bank_size", c.forest_bank_size);
    get("reference_pans", c.reference_pans);
    get("reference_tilts", c.reference_tilts);
    get("reference_focal", c.reference_focal);
    get("query_poses", c.query_poses);
    get("appearance_sigma", c.appearance_sigma);
    get("outlier_prob", c.outlier_prob);
    get("descriptor_dim", c.descriptor_dim);
    get("tree_count", c.tree_count);
    get("max_depth", c.max_depth);
    get("min_samples", c.min_samples);
    get("candidates_per_node", c.candidates_per_node);
    get("threshold_quantile", c.threshold_quantile);
    if (j.contains("feature_distance_threshold") && !j.at("feature_distance_threshold").is_null()) {
      c.feature_distance_threshold = j.at("feature_distance_threshold").get<double>();
    }
    get_range("fov_focal_range", c.fov_focal_range);
    get("fov_queries", c.fov_queries);
    get("workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path));
}

}  // namespace ptzcalib
