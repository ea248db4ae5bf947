#include "ptzcalib/synth/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <ostream>

#include "json.hpp"
#include "ptzcalib/core/camera.hpp"
#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/core/parallel.hpp"
#include "ptzcalib/synth/appearance.hpp"

namespace ptzcalib {

namespace {

constexpr std::uint64_t kCameraStream = 0xca3e7a;
constexpr std::uint64_t kTrialStream = 0x7e1a1;
constexpr std::uint64_t kBaseStream = 0xba5e;
constexpr std::uint64_t kReferenceStream = 0x7ef;
constexpr std::uint64_t kQueryStream = 0x9e7;

PtzParams trial_camera(const ExperimentConfig& config, int cam) {
  Rng rng(mix_seed({config.seed, kCameraStream, static_cast<std::uint64_t>(cam)}));
  return sample_camera(config, rng);
}

std::uint64_t trial_seed(const ExperimentConfig& config, std::uint64_t stream, int cam, int trial) {
  return mix_seed({config.seed, stream, static_cast<std::uint64_t>(cam), static_cast<std::uint64_t>(trial)});
}

double angle_between_deg(const Ray& a, const Ray& b) {
  const Eigen::Vector3d da = ray_direction(a);
  const Eigen::Vector3d db = ray_direction(b);
  return rad2deg(std::atan2(da.cross(db).norm(), da.dot(db)));
}

template <typename TrialFn>
std::vector<TrialOutcome> run_trials(const ExperimentConfig& config, TrialFn&& fn) {
  const int n = config.cameras_count * config.trials_per_camera;
  std::vector<TrialOutcome> out(n);
  parallel_for(
      n,
      [&](std::size_t idx) {
        const int cam = static_cast<int>(idx) / config.trials_per_camera;
        const int trial = static_cast<int>(idx) % config.trials_per_camera;
        try {
          out[idx].eval = fn(cam, trial);
        } catch (const Error&) {
          out[idx].failed = true;
        }
      },
      config.workers);
  return out;
}

RansacConfig trial_ransac(const ExperimentConfig& config, double threshold, std::uint64_t seed) {
  RansacConfig rc;
  rc.inlier_threshold = threshold;
  rc.min_inliers = config.min_inliers;
  rc.seed = seed;
  return rc;
}

}  // namespace

std::vector<TrialOutcome> run_noise_trials(const SyntheticScene& scene, const ExperimentConfig& config, double sigma) {
  const double threshold = std::max(config.inlier_threshold, config.noise_threshold_scale * sigma);
  return run_trials(config, [&](int cam, int trial) {
    const PtzParams gt = trial_camera(config, cam);
    // The stream does not depend on sigma: every level sees the same rays
    // and the same standard-normal draws, scaled.
    Rng rng(trial_seed(config, kTrialStream, cam, trial));
    const auto rays = sample_view_rays(scene.base, scene.field, gt, config.rays_per_view, config.fraction_off_field, rng);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<RayObservation> obs;
    obs.reserve(rays.size());
    for (const auto& ray : rays) {
      const Eigen::Vector2d pixel = project_ray(gt, scene.base.principal_point, ray);
      const double nx = n01(rng);
      const double ny = n01(rng);
      obs.push_back({pixel + sigma * Eigen::Vector2d(nx, ny), ray, 0.0});
    }
    const auto est = estimate_pose(scene.base, obs, trial_ransac(config, threshold, rng()));
    return evaluate_estimate({scene.base, gt}, {scene.base, est.ptz}, scene.field);
  });
}

std::vector<TrialOutcome> run_base_trials(const SyntheticScene& scene, const ExperimentConfig& config, BaseMode mode,
                                          double level) {
  return run_trials(config, [&](int cam, int trial) {
    const PtzParams gt = trial_camera(config, cam);
    Rng rng(trial_seed(config, kTrialStream, cam, trial));
    const auto rays = sample_view_rays(scene.base, scene.field, gt, config.rays_per_view, config.fraction_off_field, rng);

    Rng base_rng(trial_seed(config, kBaseStream, cam, trial));
    std::normal_distribution<double> n01(0.0, 1.0);
    CameraBase believed = scene.base;
    if (mode == BaseMode::Location) {
      const double dx = n01(base_rng);
      const double dy = n01(base_rng);
      const double dz = n01(base_rng);
      believed.center += level * Eigen::Vector3d(dx, dy, dz);
    } else {
      Eigen::Vector3d axis;
      do {
        const double ax = n01(base_rng);
        const double ay = n01(base_rng);
        const double az = n01(base_rng);
        axis = Eigen::Vector3d(ax, ay, az);
      } while (axis.norm() < 1e-9);
      const double angle = deg2rad(level * n01(base_rng));
      believed.base_rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix() * scene.base.base_rotation;
    }

    std::vector<RayObservation> obs;
    obs.reserve(rays.size());
    for (const auto& ray : rays) {
      const Eigen::Vector2d pixel = project_ray(gt, scene.base.principal_point, ray);
      Ray label;
      if (const auto hit = ray_field_hit(scene.base, scene.field, ray)) {
        label = direction_to_ray(believed.base_rotation * (*hit - believed.center));
      } else {
        const Eigen::Vector3d world = scene.base.base_rotation.transpose() * ray_direction(ray);
        label = direction_to_ray(believed.base_rotation * world);
      }
      obs.push_back({pixel, label, 0.0});
    }
    const auto est = estimate_pose(believed, obs, trial_ransac(config, config.inlier_threshold, rng()));
    EvalResult r = evaluate_estimate({scene.base, gt}, {scene.base, est.ptz}, scene.field);
    r.iou = compute_iou({scene.base, gt}, {believed, est.ptz}, scene.field);
    return r;
  });
}

SweepRow summarize(double level, const std::vector<TrialOutcome>& outcomes) {
  SweepRow row;
  row.level = level;
  row.trials = static_cast<int>(outcomes.size());
  std::vector<const EvalResult*> ok;
  for (const auto& o : outcomes) {
    if (o.failed) {
      ++row.fail_count;
    } else {
      ok.push_back(&o.eval);
    }
  }
  if (ok.empty()) {
    row.mean_rot_err_deg = row.mean_focal_err_px = std::numeric_limits<double>::quiet_NaN();
    row.std_rot_err_deg = row.std_focal_err_px = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  const double n = static_cast<double>(ok.size());
  for (const auto* e : ok) {
    row.mean_rot_err_deg += e->rotation_error;
    row.mean_focal_err_px += e->focal_error;
    row.mean_iou += e->iou;
  }
  row.mean_rot_err_deg /= n;
  row.mean_focal_err_px /= n;
  row.mean_iou /= n;
  if (ok.size() > 1) {
    for (const auto* e : ok) {
      row.std_rot_err_deg += std::pow(e->rotation_error - row.mean_rot_err_deg, 2);
      row.std_focal_err_px += std::pow(e->focal_error - row.mean_focal_err_px, 2);
    }
    row.std_rot_err_deg = std::sqrt(row.std_rot_err_deg / (n - 1.0));
    row.std_focal_err_px = std::sqrt(row.std_focal_err_px / (n - 1.0));
  }
  return row;
}

SweepResult run_noise_sweep(const SyntheticScene& scene, const ExperimentConfig& config) {
  config.validate();
  SweepResult out{"sigma", {}};
  for (double sigma : config.noise_levels) out.rows.push_back(summarize(sigma, run_noise_trials(scene, config, sigma)));
  return out;
}

SweepResult run_base_uncertainty_sweep(const SyntheticScene& scene, const ExperimentConfig& config, BaseMode mode) {
  config.validate();
  SweepResult out;
  out.parameter = mode == BaseMode::Location ? "location_m" : "rotation_deg";
  const auto& levels = mode == BaseMode::Location ? config.location_levels : config.rotation_levels;
  for (double level : levels) out.rows.push_back(summarize(level, run_base_trials(scene, config, mode, level)));
  return out;
}

SyntheticView render_view(const SyntheticScene& scene, const PtzParams& ptz, double appearance_sigma,
                          double outlier_prob, std::uint64_t seed, int descriptor_dim) {
  SyntheticView view;
  view.ptz = ptz;
  for (int i : visible_rays(scene, ptz)) {
    const Ray& ray = scene.ray_bank[i].ray;
    const std::uint64_t key_seed = mix_seed({seed, static_cast<std::uint64_t>(i)});
    Rng rng(key_seed);
    const bool outlier = outlier_prob > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < outlier_prob;
    Keypoint kp;
    kp.pixel = project_ray(ptz, scene.base.principal_point, ray);
    kp.descriptor = appearance_oracle(ray, appearance_sigma, outlier ? 1.0 : 0.0, key_seed, descriptor_dim);
    view.keypoints.push_back(std::move(kp));
    view.bank_index.push_back(i);
    view.outlier.push_back(outlier ? 1 : 0);
  }
  return view;
}

std::vector<PtzParams> reference_poses(const ExperimentConfig& config) {
  auto grid = [](const Range& r, int n, int k) {
    return n == 1 ? 0.5 * (r.min + r.max) : r.min + r.span() * k / (n - 1);
  };
  std::vector<PtzParams> out;
  for (int t = 0; t < config.reference_tilts; ++t) {
    for (int p = 0; p < config.reference_pans; ++p) {
      out.push_back({grid(config.pan_range, config.reference_pans, p), grid(config.tilt_range, config.reference_tilts, t),
                     config.reference_focal});
    }
  }
  return out;
}

std::vector<TrainingSample> build_training_set(const SyntheticScene& scene, const ExperimentConfig& config) {
  const auto poses = reference_poses(config);
  std::vector<std::vector<TrainingSample>> per_view(poses.size());
  parallel_for(
      poses.size(),
      [&](std::size_t r) {
        const auto view = render_view(scene, poses[r], config.appearance_sigma, 0.0,
                                      mix_seed({config.seed, kReferenceStream, r}), config.descriptor_dim);
        per_view[r] = label_keypoints(poses[r], scene.base.principal_point, view.keypoints);
      },
      config.workers);
  std::vector<TrainingSample> out;
  for (auto& v : per_view) {
    for (auto& s : v) out.push_back(std::move(s));
  }
  return out;
}

ForestConfig forest_config(const ExperimentConfig& config) {
  ForestConfig fc;
  fc.tree_count = config.tree_count;
  fc.max_depth = config.max_depth;
  fc.min_samples = config.min_samples;
  fc.candidates_per_node = config.candidates_per_node;
  fc.seed = mix_seed({config.seed, 0xf0ULL});
  fc.threshold_quantile = config.threshold_quantile;
  fc.feature_distance_threshold = config.feature_distance_threshold;
  fc.workers = config.workers;
  return fc;
}

std::vector<PtzParams> sample_query_poses(const ExperimentConfig& config, int count, const Range& focal_range,
                                          std::uint64_t stream) {
  Rng rng(mix_seed({config.seed, kQueryStream, stream}));
  std::vector<PtzParams> out;
  for (int i = 0; i < count; ++i) out.push_back(sample_camera(config, rng, focal_range));
  return out;
}

GatingReport evaluate_gating(const PanTiltForest& forest, const SyntheticScene& scene,
                             const std::vector<SyntheticView>& views, double max_error_deg) {
  long gated_ok = 0;
  long ungated_ok = 0;
  GatingReport report;
  for (const auto& view : views) {
    for (std::size_t k = 0; k < view.keypoints.size(); ++k) {
      const Ray& truth = scene.ray_bank[view.bank_index[k]].ray;
      for (const auto& p : predict_ray(forest, view.keypoints[k].descriptor, std::numeric_limits<double>::infinity())) {
        const bool ok = angle_between_deg(p.ray, truth) < max_error_deg;
        ++report.ungated_predictions;
        ungated_ok += ok ? 1 : 0;
        if (p.feature_distance <= forest.feature_distance_threshold) {
          ++report.gated_predictions;
          gated_ok += ok ? 1 : 0;
        }
      }
    }
  }
  if (report.gated_predictions > 0) report.gated_inlier_rate = static_cast<double>(gated_ok) / report.gated_predictions;
  if (report.ungated_predictions > 0) {
    report.ungated_inlier_rate = static_cast<double>(ungated_ok) / report.ungated_predictions;
  }
  return report;
}

std::vector<SyntheticView> render_query_views(const SyntheticScene& scene, const ExperimentConfig& config,
                                              const std::vector<PtzParams>& poses, std::uint64_t stream) {
  std::vector<SyntheticView> views(poses.size());
  parallel_for(
      poses.size(),
      [&](std::size_t i) {
        views[i] = render_view(scene, poses[i], config.appearance_sigma, config.outlier_prob,
                               mix_seed({config.seed, kQueryStream, stream, i}), config.descriptor_dim);
      },
      config.workers);
  return views;
}

std::vector<QueryResult> run_forest_queries(const PanTiltForest& forest, const SyntheticScene& scene,
                                            const ExperimentConfig& config, const std::vector<SyntheticView>& views) {
  std::vector<QueryResult> out(views.size());
  parallel_for(
      views.size(),
      [&](std::size_t i) {
        QueryResult& q = out[i];
        q.gt = views[i].ptz;
        q.fov_deg = horizontal_fov(q.gt.focal_length, scene.base.image_size.width);
        RansacConfig rc;
        rc.inlier_threshold = config.inlier_threshold;
        rc.min_inliers = config.min_inliers;
        rc.seed = mix_seed({config.seed, 0x9c, i});
        try {
          const auto est = calibrate_image(scene.base, forest, views[i].keypoints, rc);
          q.estimate = est.ptz;
          q.inliers = static_cast<int>(est.inlier_indices.size());
          q.iou = compute_iou({scene.base, q.gt}, {scene.base, est.ptz}, scene.field);
        } catch (const Error& e) {
          q.failure = e.what();
          q.iou = 0.0;
        }
      },
      config.workers);
  return out;
}

ForestExperimentResult run_forest_experiment(const ExperimentConfig& config) {
  config.validate();
  const SyntheticScene scene = generate_scene(config, config.forest_bank_size);
  const auto samples = build_training_set(scene, config);
  const PanTiltForest forest = train_forest(samples, forest_config(config));
  const auto poses = sample_query_poses(config, config.query_poses, config.focal_range, 1);
  const auto views = render_query_views(scene, config, poses, 1);
  ForestExperimentResult out;
  out.gating = evaluate_gating(forest, scene, views);
  out.queries = run_forest_queries(forest, scene, config, views);
  for (const auto& q : out.queries) out.mean_iou += q.iou;
  out.mean_iou /= static_cast<double>(out.queries.size());
  return out;
}

std::vector<QueryResult> run_fov_report(const PanTiltForest& forest, const SyntheticScene& scene,
                                        const ExperimentConfig& config) {
  const auto poses = sample_query_poses(config, config.fov_queries, config.fov_focal_range, 2);
  return run_forest_queries(forest, scene, config, render_query_views(scene, config, poses, 2));
}

OutputFormat parse_output_format(const std::string& name) {
  if (name == "table") return OutputFormat::Table;
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json-like" || name == "json") return OutputFormat::JsonLike;
  throw InvalidArgument("unknown output format: " + name);
}

void write_sweep(std::ostream& out, const SweepResult& sweep, OutputFormat format) {
  static const char* kColumns[] = {"mean_rot_err_deg", "std_rot_err_deg", "mean_focal_err_px",
                                   "std_focal_err_px", "mean_iou",        "fail_count"};
  char buf[256];
  if (format == OutputFormat::JsonLike) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : sweep.rows) {
      rows.push_back({{sweep.parameter, r.level},
                      {"mean_rot_err_deg", r.mean_rot_err_deg},
                      {"std_rot_err_deg", r.std_rot_err_deg},
                      {"mean_focal_err_px", r.mean_focal_err_px},
                      {"std_focal_err_px", r.std_focal_err_px},
                      {"mean_iou", r.mean_iou},
                      {"fail_count", r.fail_count},
                      {"trials", r.trials}});
    }
    out << rows.dump(2) << "\n";
    return;
  }
  if (format == OutputFormat::Csv) {
    out << sweep.parameter;
    for (const char* c : kColumns) out << "," << c;
    out << "\n";
    for (const auto& r : sweep.rows) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.level, r.mean_rot_err_deg,
                    r.std_rot_err_deg, r.mean_focal_err_px, r.std_focal_err_px, r.mean_iou, r.fail_count);
      out << buf;
    }
    return;
  }
  std::snprintf(buf, sizeof buf, "%-14s", sweep.parameter.c_str());
  out << buf;
  for (const char* c : kColumns) {
    std::snprintf(buf, sizeof buf, " %18s", c);
    out << buf;
  }
  out << "\n";
  for (const auto& r : sweep.rows) {
    std::snprintf(buf, sizeof buf, "%-14g %18.6g %18.6g %18.6g %18.6g %18.6f %18d\n", r.level, r.mean_rot_err_deg,
                  r.std_rot_err_deg, r.mean_focal_err_px, r.std_focal_err_px, r.mean_iou, r.fail_count);
    out << buf;
  }
}

void write_fov_report(std::ostream& out, const std::vector<QueryResult>& rows, OutputFormat format) {
  char buf[256];
  if (format == OutputFormat::JsonLike) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& q : rows) {
      arr.push_back({{"fov_deg", q.fov_deg},
                     {"pan", q.gt.pan},
                     {"tilt", q.gt.tilt},
                     {"focal_length", q.gt.focal_length},
                     {"iou", q.iou},
                     {"inliers", q.inliers},
                     {"failed", !q.estimate.has_value()}});
    }
    out << arr.dump(2) << "\n";
    return;
  }
  const char* fmt = format == OutputFormat::Csv ? "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n"
                                                : "%-10.4f %10.4f %10.4f %12.3f %10.6f %8d %7d\n";
  out << (format == OutputFormat::Csv ? "fov_deg,pan,tilt,focal_length,iou,inliers,failed\n"
                                      : "fov_deg           pan       tilt focal_length        iou  inliers  failed\n");
  for (const auto& q : rows) {
    std::snprintf(buf, sizeof buf, fmt, q.fov_deg, q.gt.pan, q.gt.tilt, q.gt.focal_length, q.iou, q.inliers,
                  q.estimate ? 0 : 1);
    out << buf;
  }
}

}  // namespace ptzcalib
