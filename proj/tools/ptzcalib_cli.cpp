#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ptzcalib/calib/two_point.hpp"
#include "ptzcalib/core/camera.hpp"
#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/core/io.hpp"
#include "ptzcalib/core/random.hpp"
#include "ptzcalib/forest/pan_tilt_forest.hpp"
#include "ptzcalib/pose/pose_estimator.hpp"
#include "ptzcalib/service/calib_service.hpp"
#include "ptzcalib/synth/config.hpp"
#include "ptzcalib/synth/experiments.hpp"
#include "ptzcalib/synth/metrics.hpp"
#include "ptzcalib/synth/scene.hpp"

using namespace ptzcalib;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  bool full_scale = false;
  std::string format = "table";
  unsigned workers = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "experiment config (JSON)");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--out", c.out_path, "write results here instead of stdout");
  app->add_flag("--full-scale", c.full_scale, "100 cameras x 100 trials");
  app->add_option("--format", c.format, "table, csv or json-like")
      ->check(CLI::IsMember({"table", "csv", "json-like", "json"}));
  app->add_option("--workers", c.workers, "worker threads, 0 = all cores");
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig config = c.config_path.empty() ? ExperimentConfig{} : read_experiment_config(c.config_path);
  if (c.full_scale) config = config.full_scale();
  if (c.seed) config.seed = *c.seed;
  config.workers = c.workers;
  config.validate();
  return config;
}

// Runs fn with the --out file or stdout.
template <typename Fn>
void with_output(const Common& c, Fn&& fn) {
  if (c.out_path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(c.out_path);
  if (!out) throw Error("cannot open " + c.out_path);
  fn(out);
  if (!out) throw Error("write failed: " + c.out_path);
}

// Rows of named numbers, printed in any of the three formats.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write(std::ostream& out, OutputFormat format) const {
    char buf[64];
    if (format == OutputFormat::JsonLike) {
      json arr = json::array();
      for (const auto& r : rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < columns.size(); ++i) obj[columns[i]] = r[i];
        arr.push_back(std::move(obj));
      }
      out << arr.dump(2) << '\n';
      return;
    }
    const bool csv = format == OutputFormat::Csv;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (csv) {
        out << (i ? "," : "") << columns[i];
      } else {
        std::snprintf(buf, sizeof buf, "%*s", i ? 22 : 12, columns[i].c_str());
        out << buf;
      }
    }
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (csv)
          std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", r[i]);
        else
          std::snprintf(buf, sizeof buf, "%*.17g", i ? 22 : 12, r[i]);
        out << buf;
      }
      out << '\n';
    }
  }
};

FieldModel load_field(const std::string& path) {
  return path.empty() ? standard_soccer_field() : read_field_model(path);
}

CameraBase load_base(const std::string& cameras_path) {
  if (cameras_path.empty()) return synthetic_base();
  const auto cams = read_camera_file(cameras_path);
  if (cams.empty()) throw ParseError("no camera record in " + cameras_path);
  return cams.front().base;
}

// --- subcommands -----------------------------------------------------------

int cmd_synth_sweep(const Common& c, const std::string& mode) {
  const ExperimentConfig config = load_config(c);
  const SyntheticScene scene = generate_scene(config);
  SweepResult sweep;
  if (mode == "noise")
    sweep = run_noise_sweep(scene, config);
  else if (mode == "location")
    sweep = run_base_uncertainty_sweep(scene, config, BaseMode::Location);
  else
    sweep = run_base_uncertainty_sweep(scene, config, BaseMode::Rotation);
  with_output(c, [&](std::ostream& out) { write_sweep(out, sweep, parse_output_format(c.format)); });
  return 0;
}

ExperimentConfig apply_forest_flags(ExperimentConfig config, std::optional<int> trees, std::optional<int> max_depth,
                                    std::optional<double> threshold) {
  if (trees) config.tree_count = *trees;
  if (max_depth) config.max_depth = *max_depth;
  if (threshold) config.feature_distance_threshold = *threshold;
  config.validate();
  return config;
}

int cmd_train_forest(const Common& c, std::optional<int> trees, std::optional<int> max_depth,
                     std::optional<double> threshold) {
  if (c.out_path.empty()) throw InvalidArgument("train-forest needs --out <forest file>");
  const ExperimentConfig config = apply_forest_flags(load_config(c), trees, max_depth, threshold);
  const SyntheticScene scene = generate_scene(config, config.forest_bank_size);
  const auto samples = build_training_set(scene, config);
  const PanTiltForest forest = train_forest(samples, forest_config(config));
  save_forest(c.out_path, forest);
  std::size_t leaves = 0;
  for (const auto& t : forest.trees) leaves += t.leaf_count();
  std::cerr << "trained " << forest.trees.size() << " trees on " << samples.size() << " samples, " << leaves
            << " leaves, feature distance threshold " << forest.feature_distance_threshold << '\n';
  return 0;
}

int cmd_calibrate(const Common& c, const std::string& cameras_path, const std::string& forest_path,
                  const std::string& observations_path, const std::string& field_path, double sigma,
                  std::optional<double> threshold) {
  const ExperimentConfig config = load_config(c);
  const FieldModel field = load_field(field_path);
  const OutputFormat format = parse_output_format(c.format);

  if (!observations_path.empty()) {
    std::ifstream in(observations_path);
    if (!in) throw Error("cannot open " + observations_path);
    const auto obs = read_observations(in);
    const CameraBase base = load_base(cameras_path);
    RansacConfig rc;
    rc.inlier_threshold = config.inlier_threshold;
    rc.min_inliers = config.min_inliers;
    rc.seed = config.seed;
    const auto est = estimate_pose(base, obs, rc);
    Table t{{"pan", "tilt", "focal_length", "inliers", "reprojection_rmse"},
            {{est.ptz.pan, est.ptz.tilt, est.ptz.focal_length, static_cast<double>(est.inlier_indices.size()),
              est.reprojection_rmse}}};
    with_output(c, [&](std::ostream& out) { t.write(out, format); });
    return 0;
  }

  if (cameras_path.empty()) throw InvalidArgument("calibrate needs --cameras or --observations");
  const auto cams = read_camera_file(cameras_path);
  std::optional<PanTiltForest> forest;
  std::optional<SyntheticScene> scene;
  if (!forest_path.empty()) {
    forest = load_forest(forest_path);
    scene = generate_scene(config, config.forest_bank_size);
  }

  Table t{{"index", "pan", "tilt", "focal_length", "est_pan", "est_tilt", "est_focal_length", "iou", "inliers",
           "failed"},
          {}};
  std::vector<PtzCamera> estimates;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const PtzCamera& gt = cams[i];
    RansacConfig rc;
    rc.inlier_threshold = std::max(config.inlier_threshold, config.noise_threshold_scale * sigma);
    rc.min_inliers = config.min_inliers;
    rc.seed = mix_seed({config.seed, 0xca1, i});
    std::optional<PoseEstimate> est;
    try {
      if (forest) {
        SyntheticScene view_scene = *scene;
        view_scene.base = gt.base;
        const auto view = render_view(view_scene, gt.ptz, config.appearance_sigma, config.outlier_prob,
                                      mix_seed({config.seed, 0x71e, i}), config.descriptor_dim);
        est = calibrate_image(gt.base, *forest, view.keypoints, rc, threshold);
      } else {
        Rng rng(mix_seed({config.seed, 0x0b5, i}));
        const auto rays = sample_view_rays(gt.base, field, gt.ptz, config.rays_per_view, config.fraction_off_field, rng);
        std::normal_distribution<double> n01(0.0, 1.0);
        std::vector<RayObservation> obs;
        for (const auto& ray : rays) {
          const Eigen::Vector2d noise(n01(rng), n01(rng));
          obs.push_back({project_ray(gt.ptz, gt.base.principal_point, ray) + sigma * noise, ray, 0.0});
        }
        est = estimate_pose(gt.base, obs, rc);
      }
    } catch (const EstimationFailure& e) {
      std::cerr << "camera " << i << ": " << e.what() << '\n';
    }
    const double iou = est ? compute_iou(gt, {gt.base, est->ptz}, field) : 0.0;
    const PtzParams e = est ? est->ptz : PtzParams{0.0, 0.0, 0.0};
    t.rows.push_back({static_cast<double>(i), gt.ptz.pan, gt.ptz.tilt, gt.ptz.focal_length, e.pan, e.tilt,
                      e.focal_length, iou, est ? static_cast<double>(est->inlier_indices.size()) : 0.0,
                      est ? 0.0 : 1.0});
    if (est) estimates.push_back({gt.base, est->ptz});
  }
  // --out gets the estimated camera records; the table always goes to stdout.
  t.write(std::cout, format);
  if (!c.out_path.empty()) {
    std::ofstream out(c.out_path);
    write_camera_records(out, estimates);
    if (!out) throw Error("write failed: " + c.out_path);
  }
  return 0;
}

int cmd_two_point(const Common& c, const std::vector<std::vector<double>>& pairs,
                  const std::vector<std::vector<std::string>>& named, const std::string& cameras_path,
                  const std::string& field_path) {
  TwoPointProblem problem;
  problem.base = load_base(cameras_path);
  std::vector<Correspondence> corr;
  if (!pairs.empty() && !named.empty()) throw InvalidArgument("use either --pair or --named, not both");
  for (const auto& p : pairs) corr.push_back({{p[0], p[1], p[2]}, {p[3], p[4]}});
  if (!named.empty()) {
    const FieldModel field = load_field(field_path);
    for (const auto& n : named) {
      const auto point = field.find_key_point(n[0]);
      if (!point) throw InvalidArgument("unknown key point \"" + n[0] + "\"");
      corr.push_back({*point, {std::stod(n[1]), std::stod(n[2])}});
    }
  }
  if (corr.size() != 2) throw InvalidArgument("two-point needs exactly two correspondences");
  problem.corr_a = corr[0];
  problem.corr_b = corr[1];
  const CalibSolution sol = calibrate_two_points(problem);
  Table t{{"pan", "tilt", "focal_length", "reprojection_rmse", "converged"},
          {{sol.ptz.pan, sol.ptz.tilt, sol.ptz.focal_length, sol.reprojection_rmse, sol.converged ? 1.0 : 0.0}}};
  with_output(c, [&](std::ostream& out) { t.write(out, parse_output_format(c.format)); });
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& gt_path, const std::string& est_path,
                 const std::string& field_path) {
  const auto gt = read_camera_file(gt_path);
  const auto est = read_camera_file(est_path);
  if (gt.size() != est.size())
    throw InvalidArgument("camera files differ in length: " + std::to_string(gt.size()) + " vs " +
                          std::to_string(est.size()));
  const FieldModel field = load_field(field_path);
  Table t{{"index", "iou", "pan_error", "tilt_error", "rotation_error", "focal_error"}, {}};
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const EvalResult r = evaluate_estimate(gt[i], est[i], field);
    t.rows.push_back({static_cast<double>(i), r.iou, r.pan_error, r.tilt_error, r.rotation_error, r.focal_error});
  }
  with_output(c, [&](std::ostream& out) { t.write(out, parse_output_format(c.format)); });
  return 0;
}

int cmd_fov_report(const Common& c, const std::string& forest_path, std::optional<int> trees,
                   std::optional<int> max_depth, std::optional<double> threshold) {
  const ExperimentConfig config = apply_forest_flags(load_config(c), trees, max_depth, threshold);
  const SyntheticScene scene = generate_scene(config, config.forest_bank_size);
  const PanTiltForest forest =
      forest_path.empty() ? train_forest(build_training_set(scene, config), forest_config(config)) : load_forest(forest_path);
  const auto rows = run_fov_report(forest, scene, config);
  with_output(c, [&](std::ostream& out) { write_fov_report(out, rows, parse_output_format(c.format)); });
  int wide_failures = 0;
  for (const auto& q : rows)
    if (q.fov_deg > 40.0 && q.iou < 0.6) ++wide_failures;
  std::cerr << "failures (IoU < 0.6) with FOV > 40 deg: " << wide_failures << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PTZ camera calibration toolkit"};
  app.require_subcommand(1);

  Common common;
  std::string mode = "noise";
  std::optional<int> trees, max_depth;
  std::optional<double> threshold;
  std::string cameras, forest, observations, field, gt, est;
  double sigma = 0.0;
  std::vector<std::vector<double>> pairs;
  std::vector<std::vector<std::string>> named;
  ServeOptions serve;
  std::string serve_forest, serve_field, serve_persist;

  auto* sweep = app.add_subcommand("synth-sweep", "noise or base-uncertainty sweep");
  add_common(sweep, common);
  sweep->add_option("--mode", mode, "noise, location or rotation")
      ->check(CLI::IsMember({"noise", "location", "rotation"}));

  auto forest_flags = [&](CLI::App* sub) {
    sub->add_option("--trees", trees, "tree count");
    sub->add_option("--max-depth", max_depth, "maximum tree depth");
    sub->add_option("--threshold", threshold, "feature distance threshold (default: calibrated)");
  };

  auto* train = app.add_subcommand("train-forest", "train a pan-tilt forest on the synthetic reference views");
  add_common(train, common);
  forest_flags(train);

  auto* calib = app.add_subcommand("calibrate", "estimate pan/tilt/focal for synthetic views or an observation dump");
  add_common(calib, common);
  calib->add_option("--cameras", cameras, "camera records (ground truth of the synthetic views)");
  calib->add_option("--forest", forest, "forest file; without it the exact ray labels are used");
  calib->add_option("--observations", observations, "observation dump (x y pan tilt distance per row)");
  calib->add_option("--field", field, "field model JSON");
  calib->add_option("--sigma", sigma, "pixel noise for label-based views");
  calib->add_option("--threshold", threshold, "feature distance threshold override");

  auto* two = app.add_subcommand("two-point", "calibrate from two point correspondences");
  add_common(two, common);
  two->add_option("--pair", pairs, "X Y Z x y (give twice)")->expected(5)->allow_extra_args(false);
  two->add_option("--named", named, "KEY_POINT x y (give twice)")->expected(3)->allow_extra_args(false);
  two->add_option("--cameras", cameras, "camera record file; the first record's base is used");
  two->add_option("--field", field, "field model JSON");

  auto* eval = app.add_subcommand("evaluate", "IoU and parameter errors of estimated cameras");
  add_common(eval, common);
  eval->add_option("--gt", gt, "ground-truth camera records")->required();
  eval->add_option("--est", est, "estimated camera records")->required();
  eval->add_option("--field", field, "field model JSON");

  auto* fov = app.add_subcommand("fov-report", "forest queries over a wide focal range, one row per query");
  add_common(fov, common);
  fov->add_option("--forest", forest, "forest file (default: train one)");
  forest_flags(fov);

  auto* srv = app.add_subcommand("serve", "HTTP calibration service");
  srv->add_option("--host", serve.host, "bind address");
  srv->add_option("--port", serve.port, "port");
  srv->add_option("--forest", serve_forest, "forest file for auto-calibrate");
  srv->add_option("--field", serve_field, "field model JSON");
  srv->add_option("--persist", serve_persist, "directory for per-session files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sweep) return cmd_synth_sweep(common, mode);
    if (*train) return cmd_train_forest(common, trees, max_depth, threshold);
    if (*calib) return cmd_calibrate(common, cameras, forest, observations, field, sigma, threshold);
    if (*two) return cmd_two_point(common, pairs, named, cameras, field);
    if (*eval) return cmd_evaluate(common, gt, est, field);
    if (*fov) return cmd_fov_report(common, forest, trees, max_depth, threshold);
    if (*srv) {
      if (!serve_forest.empty()) serve.forest_path = serve_forest;
      if (!serve_field.empty()) serve.field_path = serve_field;
      if (!serve_persist.empty()) serve.persist_dir = serve_persist;
      return run_service(serve);
    }
  } catch (const std::exception& e) {
    std::cerr << "ptzcalib: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
