// One [PASS]/[FAIL] line per primary acceptance criterion. Exit code 1 when
// any criterion fails.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "ptzcalib/core/angles.hpp"
#include "ptzcalib/pose/pose_estimator.hpp"
#include "ptzcalib/synth/experiments.hpp"
#include "ptzcalib/synth/metrics.hpp"
#include "ptzcalib/synth/scene.hpp"

using namespace ptzcalib;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

template <typename... Args>
std::string format(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double world_angle(const TwoPointProblem& p) {
  const Eigen::Vector3d a = p.corr_a.world_point - p.base.center;
  const Eigen::Vector3d b = p.corr_b.world_point - p.base.center;
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

void noise_robustness() {
  const ExperimentConfig config;
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult sweep = run_noise_sweep(generate_scene(config), config);
  const double secs = seconds_since(t0);
  const SweepRow* row = nullptr;
  for (const auto& r : sweep.rows)
    if (r.level == 3.0) row = &r;
  if (!row) {
    report(false, "noise robustness", "no sigma = 3 row");
    return;
  }
  const bool ok = row->mean_rot_err_deg <= 0.02 && row->mean_focal_err_px <= 2.5 && secs < 120.0;
  report(ok, "noise robustness",
         format("sigma=3: mean rotation error %.4f deg (<= 0.02), mean focal error %.3f px (<= 2.5), "
                "%d/%d failed trials, %.1f s (< 120)",
                row->mean_rot_err_deg, row->mean_focal_err_px, row->fail_count, row->trials, secs));
}

void iteration_table() {
  const RansacConfig c;
  const int a = ransac_iterations(4, c), b = ransac_iterations(2, c), d = ransac_iterations(1, c);
  report(a == 71 && b == 16 && d == 7, "RANSAC iteration table", format("min sets 4/2/1 -> %d/%d/%d (want 71/16/7)", a, b, d));
}

void zero_noise() {
  std::mt19937_64 rng(2024);
  int failed = 0;
  double worst_angle = 0.0, worst_focal = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto c = fixture::random_two_point_case(rng);
    try {
      const CalibSolution s = calibrate_two_points(c.problem);
      worst_angle = std::max({worst_angle, std::abs(wrap_degrees(s.ptz.pan - c.truth.pan)),
                              std::abs(wrap_degrees(s.ptz.tilt - c.truth.tilt))});
      worst_focal = std::max(worst_focal, std::abs(s.ptz.focal_length - c.truth.focal_length));
    } catch (const Error&) {
      ++failed;
    }
  }
  report(failed == 0 && worst_angle <= 1e-6 && worst_focal <= 1e-3, "zero-noise exactness",
         format("1000 problems, %d failures, worst pan/tilt error %.3g deg (<= 1e-6), worst focal error %.3g px "
                "(<= 1e-3)",
                failed, worst_angle, worst_focal));
}

void closed_form_vs_oracle() {
  std::mt19937_64 rng(77);
  int focal_bad = 0;
  double focal_worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto c = fixture::random_two_point_case(rng);
    const auto closed = focal_from_two_points(c.problem);
    const auto brute = oracle::focal_roots(c.problem.base.principal_point, c.problem.corr_a.pixel,
                                           c.problem.corr_b.pixel, world_angle(c.problem));
    bool ok = !brute.empty();
    auto nearest = [](double x, const std::vector<double>& set) {
      double best = 1e300;
      for (double y : set) best = std::min(best, std::abs(x - y));
      return best;
    };
    for (double f : brute) {
      const double d = nearest(f, closed);
      focal_worst = std::max(focal_worst, d);
      ok = ok && d <= 0.1;
    }
    for (double g : closed)
      if (g >= 50.0 && g <= 50000.0) ok = ok && nearest(g, brute) <= 0.1;
    focal_bad += !ok;
  }

  int pt_bad = 0;
  for (int i = 0; i < 500; ++i) {
    const auto c = fixture::random_two_point_case(rng);
    const double f = c.truth.focal_length;
    const auto& corr = c.problem.corr_a;
    std::vector<PtzParams> cands;
    try {
      cands = pan_tilt_from_one_point(c.problem.base, f, corr);
    } catch (const Error&) {
      ++pt_bad;
      continue;
    }
    const double cell_px = f * oracle::rad(0.01);
    bool ok = true;
    // Grid minima over the whole domain, each refined to 0.01 degrees.
    for (const auto& [p, t] : oracle::coarse_minima(c.problem.base, f, corr.world_point, corr.pixel)) {
      const auto hit = oracle::pan_tilt_grid(c.problem.base, f, corr.world_point, corr.pixel, p, t);
      if (hit.error > cell_px || std::abs(hit.pan) > 88.0 || std::abs(hit.tilt) > 88.0) continue;
      bool matched = false;
      for (const auto& cand : cands)
        matched = matched || (std::abs(cand.pan - hit.pan) <= 0.01 + 1e-9 && std::abs(cand.tilt - hit.tilt) <= 0.01 + 1e-9);
      ok = ok && matched;
    }
    // And every candidate is a grid minimum.
    for (const auto& cand : cands) {
      if (std::abs(cand.pan) > 88.0 || std::abs(cand.tilt) > 88.0) continue;
      const auto hit = oracle::pan_tilt_grid(c.problem.base, f, corr.world_point, corr.pixel, cand.pan, cand.tilt);
      ok = ok && std::abs(cand.pan - hit.pan) <= 0.01 + 1e-9 && std::abs(cand.tilt - hit.tilt) <= 0.01 + 1e-9;
    }
    pt_bad += !ok;
  }
  report(focal_bad == 0 && pt_bad == 0, "closed form vs oracle",
         format("focal: %d/500 mismatches, worst root distance %.2g px (<= 0.1); pan/tilt: %d/500 outside one "
                "0.01 deg cell",
                focal_bad, focal_worst, pt_bad));
}

void iou_properties() {
  std::mt19937_64 rng(5);
  const CameraBase base = synthetic_base();
  const FieldModel field = standard_soccer_field();
  std::uniform_real_distribution<double> pan(15, 75), tilt(-14, -5), f(1500, 5000);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst_id = 0.0, worst_sym = 0.0, worst_raster = 0.0;
  for (int i = 0; i < 100; ++i) {
    const PtzCamera a{base, {pan(rng), tilt(rng), f(rng)}};
    PtzCamera b = a;
    b.ptz.pan += 1.5 * n(rng);
    b.ptz.tilt += 0.7 * n(rng);
    b.ptz.focal_length *= 1.0 + 0.08 * n(rng);
    worst_id = std::max(worst_id, std::abs(compute_iou(a, a, field) - 1.0));
    const double ab = compute_iou(a, b, field);
    worst_sym = std::max(worst_sym, std::abs(ab - compute_iou(b, a, field)));
    worst_raster =
        std::max(worst_raster, std::abs(ab - oracle::raster_iou(a, b, field.length, field.width, kFootprintMargin, 0.1)));
  }
  report(worst_id <= 1e-6 && worst_sym <= 1e-9 && worst_raster <= 0.01, "IoU metric properties",
         format("identity |IoU-1| %.2g (<= 1e-6), symmetry %.2g (<= 1e-9), raster oracle %.4f (<= 0.01) over 100 "
                "pairs",
                worst_id, worst_sym, worst_raster));
}

void base_uncertainty() {
  const ExperimentConfig config;
  const SyntheticScene scene = generate_scene(config);
  const auto loc = run_base_uncertainty_sweep(scene, config, BaseMode::Location);
  const auto rot = run_base_uncertainty_sweep(scene, config, BaseMode::Rotation);
  bool ok = true;
  std::string detail = "location";
  for (const auto& r : loc.rows) {
    if (r.level <= 0.5) ok = ok && r.mean_rot_err_deg < 0.1;
    detail += format(" %gm->%.4f", r.level, r.mean_rot_err_deg);
  }
  detail += " deg (< 0.1 up to 0.5 m); rotation";
  for (const auto& r : rot.rows) {
    if (r.level == 0.1 || r.level == 0.5)
      ok = ok && r.mean_rot_err_deg >= 0.3 * r.level && r.mean_rot_err_deg <= 3.0 * r.level;
    detail += format(" %gdeg->%.4f", r.level, r.mean_rot_err_deg);
  }
  detail += " deg (in [0.3d, 3d] for d = 0.1, 0.5)";
  report(ok, "base uncertainty", detail);
}

struct ForestRun {
  ForestExperimentResult experiment;
  std::vector<QueryResult> fov;
  std::string forest_bytes;
};

ForestRun forest_run(const ExperimentConfig& config) {
  ForestRun out;
  out.experiment = run_forest_experiment(config);
  const SyntheticScene scene = generate_scene(config, config.forest_bank_size);
  const PanTiltForest forest = train_forest(build_training_set(scene, config), forest_config(config));
  out.forest_bytes = serialize_forest(forest);
  out.fov = run_fov_report(forest, scene, config);
  return out;
}

void outlier_gating(const ForestRun& run) {
  const auto& g = run.experiment.gating;
  const double diff = g.gated_inlier_rate - g.ungated_inlier_rate;
  int failed = 0;
  for (const auto& q : run.experiment.queries) failed += !q.estimate.has_value();
  report(diff >= 0.10 && run.experiment.mean_iou >= 0.9, "outlier gating",
         format("inlier rate gated %.3f vs ungated %.3f (+%.3f, need >= 0.10); mean IoU %.4f over %zu held-out poses "
                "(>= 0.9), %d failed",
                g.gated_inlier_rate, g.ungated_inlier_rate, diff, run.experiment.mean_iou,
                run.experiment.queries.size(), failed));
}

void fov_property(const ForestRun& run) {
  int wide = 0, bad = 0, narrow_bad = 0;
  for (const auto& q : run.fov) {
    if (q.fov_deg > 40.0) {
      ++wide;
      bad += q.iou < 0.6;
    } else {
      narrow_bad += q.iou < 0.6;
    }
  }
  report(wide > 0 && bad == 0, "FOV property",
         format("%d of %d queries have FOV > 40 deg, %d of them with IoU < 0.6 (need 0); %d failures at FOV <= 40",
                wide, static_cast<int>(run.fov.size()), bad, narrow_bad));
}

bool same_sweep(const SweepResult& a, const SweepResult& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto &x = a.rows[i], &y = b.rows[i];
    if (x.mean_rot_err_deg != y.mean_rot_err_deg || x.std_rot_err_deg != y.std_rot_err_deg ||
        x.mean_focal_err_px != y.mean_focal_err_px || x.std_focal_err_px != y.std_focal_err_px ||
        x.mean_iou != y.mean_iou || x.fail_count != y.fail_count)
      return false;
  }
  return true;
}

bool same_queries(const std::vector<QueryResult>& a, const std::vector<QueryResult>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].iou != b[i].iou || a[i].inliers != b[i].inliers || a[i].estimate.has_value() != b[i].estimate.has_value())
      return false;
    if (a[i].estimate && (a[i].estimate->pan != b[i].estimate->pan || a[i].estimate->tilt != b[i].estimate->tilt ||
                          a[i].estimate->focal_length != b[i].estimate->focal_length))
      return false;
  }
  return true;
}

void determinism(const ForestRun& parallel_run) {
  ExperimentConfig serial;
  serial.workers = 1;
  ExperimentConfig parallel;
  parallel.workers = 4;
  const SyntheticScene scene = generate_scene(serial);
  bool sweeps = same_sweep(run_noise_sweep(scene, serial), run_noise_sweep(scene, parallel)) &&
                same_sweep(run_base_uncertainty_sweep(scene, serial, BaseMode::Location),
                           run_base_uncertainty_sweep(scene, parallel, BaseMode::Location)) &&
                same_sweep(run_base_uncertainty_sweep(scene, serial, BaseMode::Rotation),
                           run_base_uncertainty_sweep(scene, parallel, BaseMode::Rotation));
  const ForestRun s = forest_run(serial);
  const bool forest = s.forest_bytes == parallel_run.forest_bytes &&
                      same_queries(s.experiment.queries, parallel_run.experiment.queries) &&
                      same_queries(s.fov, parallel_run.fov) &&
                      s.experiment.gating.gated_inlier_rate == parallel_run.experiment.gating.gated_inlier_rate &&
                      s.experiment.gating.ungated_inlier_rate == parallel_run.experiment.gating.ungated_inlier_rate;
  report(sweeps && forest, "determinism",
         format("1 vs 4 workers: sweeps %s, forest bytes/queries/gating %s", sweeps ? "identical" : "DIFFER",
                forest ? "identical" : "DIFFER"));
}

}  // namespace

int main() {
  noise_robustness();
  iteration_table();
  zero_noise();
  closed_form_vs_oracle();
  iou_properties();
  base_uncertainty();
  ExperimentConfig parallel;
  parallel.workers = 4;
  const ForestRun run = forest_run(parallel);
  outlier_gating(run);
  fov_property(run);
  determinism(run);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
