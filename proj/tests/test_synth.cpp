#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ptzcalib/core/camera.hpp"
#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/core/random.hpp"
#include "ptzcalib/synth/appearance.hpp"
#include "ptzcalib/synth/config.hpp"
#include "ptzcalib/synth/experiments.hpp"
#include "ptzcalib/synth/image.hpp"
#include "ptzcalib/synth/metrics.hpp"
#include "ptzcalib/synth/scene.hpp"

using namespace ptzcalib;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.cameras_count = 4;
  c.trials_per_camera = 3;
  c.noise_levels = {1.0, 3.0};
  c.location_levels = {0.5};
  c.rotation_levels = {0.5};
  return c;
}

PtzParams random_view(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pan(15, 75), tilt(-14, -5), f(1500, 5000);
  return {pan(rng), tilt(rng), f(rng)};
}

}  // namespace

TEST(Random, MixSeedSpreadsInputs) {
  EXPECT_NE(mix_seed({1, 2}), mix_seed({2, 1}));
  EXPECT_EQ(mix_seed({7, 8, 9}), mix_seed({7, 8, 9}));
  EXPECT_NE(mix_seed({0}), mix_seed({0, 0}));
}

TEST(Metrics, IouIdentitySymmetryAndRaster) {
  std::mt19937_64 rng(31);
  const CameraBase base = synthetic_base();
  const FieldModel field = standard_soccer_field();
  std::normal_distribution<double> dp(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const PtzCamera gt{base, random_view(rng)};
    PtzCamera est = gt;
    est.ptz.pan += dp(rng);
    est.ptz.tilt += 0.5 * dp(rng);
    est.ptz.focal_length *= 1.0 + 0.05 * dp(rng);
    EXPECT_NEAR(compute_iou(gt, gt, field), 1.0, 1e-6);
    const double ab = compute_iou(gt, est, field);
    EXPECT_NEAR(ab, compute_iou(est, gt, field), 1e-9);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_NEAR(ab, oracle::raster_iou(gt, est, field.length, field.width, kFootprintMargin, 0.1), 0.01) << i;
  }
}

TEST(Metrics, FootprintEmptyWhenLookingUp) {
  const CameraBase base = synthetic_base();
  const FieldModel field = standard_soccer_field();
  const PtzCamera sky{base, {40.0, 40.0, 3000.0}};
  EXPECT_TRUE(field_footprint(sky, field).empty());
  EXPECT_DOUBLE_EQ(compute_iou(sky, sky, field), 1.0);
  EXPECT_DOUBLE_EQ(compute_iou(sky, {base, {40.0, -10.0, 3000.0}}, field), 0.0);
}

TEST(Metrics, RotationErrorOracle) {
  std::mt19937_64 rng(32);
  const CameraBase base = synthetic_base();
  for (int i = 0; i < 50; ++i) {
    const PtzParams a = random_view(rng);
    PtzParams b = random_view(rng);
    const auto e = rotation_focal_error(a, b, base);
    EXPECT_NEAR(e.rotation_error,
                oracle::rotation_angle(oracle::rotation(a.pan, a.tilt, base.base_rotation),
                                       oracle::rotation(b.pan, b.tilt, base.base_rotation)),
                1e-6);
    EXPECT_DOUBLE_EQ(e.focal_error, std::abs(a.focal_length - b.focal_length));
  }
  // Pure pan at zero tilt: the angle is the pan difference.
  EXPECT_NEAR(rotation_focal_error({10, 0, 1000}, {13.5, 0, 1000}, base).rotation_error, 3.5, 1e-9);
}

TEST(Appearance, DeterministicAndCellBased) {
  const Ray r{30.01, -7.01};
  EXPECT_EQ(canonical_appearance(r), canonical_appearance(r));
  EXPECT_EQ(canonical_appearance(r).size(), 128);
  EXPECT_EQ(appearance_oracle(r, 0.0, 0.0, 5), canonical_appearance(r));
  EXPECT_EQ(appearance_oracle(r, 0.1, 0.3, 5), appearance_oracle(r, 0.1, 0.3, 5));
  EXPECT_NE(canonical_appearance(r), canonical_appearance(Ray{30.2, -7.01}));
  const auto noisy = appearance_oracle(r, 0.02, 0.0, 9);
  EXPECT_LT((noisy - canonical_appearance(r)).norm(), 0.02 * 128 * 0.5);
  EXPECT_GT((appearance_oracle(r, 0.0, 1.0, 9) - canonical_appearance(r)).norm(), 5.0);
}

TEST(Scene, BankAndViewSampling) {
  ExperimentConfig c;
  const SyntheticScene scene = generate_scene(c);
  ASSERT_EQ(scene.ray_bank.size(), 200u);
  int off = 0;
  for (const auto& b : scene.ray_bank) {
    off += !b.on_field;
    const auto hit = ray_field_hit(scene.base, scene.field, b.ray);
    EXPECT_EQ(hit.has_value(), b.on_field);
    if (b.on_field) EXPECT_LT((*hit - b.field_point).norm(), 1e-9);
  }
  EXPECT_NEAR(off / 200.0, 0.9, 0.02);
  const SyntheticScene again = generate_scene(c);
  EXPECT_EQ(again.ray_bank[17].ray.pan, scene.ray_bank[17].ray.pan);

  Rng rng(3);
  const PtzParams ptz{45, -10, 2000};
  const auto rays = sample_view_rays(scene.base, scene.field, ptz, 200, 0.9, rng);
  ASSERT_EQ(rays.size(), 200u);
  int off_view = 0;
  for (const auto& r : rays) {
    const Eigen::Vector2d p = project_ray(ptz, scene.base.principal_point, r);
    EXPECT_TRUE(scene.base.image_size.contains(p));
    off_view += !ray_field_hit(scene.base, scene.field, r).has_value();
  }
  EXPECT_GT(off_view, 100);
}

TEST(Config, JsonRoundTripAndErrors) {
  ExperimentConfig c;
  c.seed = 77;
  c.noise_levels = {0.25};
  c.feature_distance_threshold = 3.5;
  const ExperimentConfig back = config_from_json(nlohmann::json::parse(config_to_json(c).dump()));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"bogus": 1})")), ParseError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"seed": "x"})")), ParseError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse("[1, 2]")), ParseError);
  ExperimentConfig bad;
  bad.cameras_count = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = ExperimentConfig{};
  bad.pan_range = {10, 5};
  EXPECT_THROW(bad.validate(), InvalidArgument);
  EXPECT_EQ(c.full_scale().cameras_count, 100);
  EXPECT_EQ(c.full_scale().trials_per_camera, 100);
}

TEST(Pgm, RoundTripAndStrictness) {
  GrayImage img(7, 5);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 7);
  const std::string bytes = encode_pgm(img);
  EXPECT_EQ(parse_pgm(bytes), img);
  EXPECT_EQ(parse_pgm("P5\n# comment\n7 5\n255\n" + bytes.substr(bytes.size() - 35)), img);
  EXPECT_THROW(parse_pgm(bytes + "x"), ParseError);
  EXPECT_THROW(parse_pgm(bytes.substr(0, bytes.size() - 1)), ParseError);
  EXPECT_THROW(parse_pgm("P2\n1 1\n255\n0"), ParseError);
  EXPECT_THROW(parse_pgm("P5\n1 1\n100\n\xff"), ParseError);
  EXPECT_THROW(parse_pgm("P5\n1 1\n65535\n\x01\x01"), ParseError);
  EXPECT_THROW(parse_pgm(""), ParseError);

  const auto path = std::filesystem::temp_directory_path() / "ptzcalib_test.pgm";
  write_pgm(path, img);
  EXPECT_EQ(read_pgm(path), img);
  std::filesystem::remove(path);
}

TEST(PatchDescriptor, QuarterTurnShiftsBins) {
  const int n = 64, r = 8;
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> v(0, 255);
  GrayImage img(n, n);
  // Smooth random pattern.
  std::vector<double> coarse(64);
  for (auto& x : coarse) x = v(rng);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double fx = x / 9.0, fy = y / 9.0;
      const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
      const double tx = fx - ix, ty = fy - iy;
      auto c = [&](int a, int b) { return coarse[(b % 8) * 8 + (a % 8)]; };
      img.at(x, y) = static_cast<std::uint8_t>(std::lround((1 - ty) * ((1 - tx) * c(ix, iy) + tx * c(ix + 1, iy)) +
                                                           ty * ((1 - tx) * c(ix, iy + 1) + tx * c(ix + 1, iy + 1))));
    }
  // Rotate the content a quarter turn (x toward y) about the patch center.
  const int cx = n / 2, cy = n / 2;
  GrayImage rot(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) rot.at(x, y) = img.at(cx + y - cy, cy + cx - x - 1);

  const auto a = patch_descriptor(img, {cx, cy}, r);
  const auto b = patch_descriptor(rot, {cx, cy}, r);
  ASSERT_FALSE(a.flat);
  EXPECT_NEAR(a.values.norm(), 1.0, 1e-12);
  for (int row = 0; row < 4; ++row)
    for (int col = 0; col < 4; ++col)
      for (int bin = 0; bin < 8; ++bin) {
        const int row2 = col, col2 = 3 - row;
        EXPECT_NEAR(b.values[(row2 * 4 + col2) * 8 + (bin + 2) % 8], a.values[(row * 4 + col) * 8 + bin], 1e-12);
      }
}

TEST(PatchDescriptor, FlatBoundsAndExtraction) {
  GrayImage flat(40, 40, 100);
  const auto d = patch_descriptor(flat, {20, 20}, 8);
  EXPECT_TRUE(d.flat);
  EXPECT_EQ(d.values.norm(), 0.0);
  EXPECT_THROW(patch_descriptor(flat, {5, 20}, 8), InvalidArgument);
  EXPECT_THROW(patch_descriptor(flat, {20, 20}, 7), InvalidArgument);
  EXPECT_NO_THROW(patch_descriptor(flat, {9, 9}, 8));
  EXPECT_THROW(patch_descriptor(flat, {8, 9}, 8), InvalidArgument);
  EXPECT_NO_THROW(patch_descriptor(flat, {31, 31}, 8));
  EXPECT_THROW(patch_descriptor(flat, {32, 20}, 8), InvalidArgument);
  const auto kps = extract_keypoints(flat, {{20, 20}, {2, 2}, {30.4, 10.6}}, 8);
  ASSERT_EQ(kps.size(), 2u);
  EXPECT_EQ(kps[1].pixel, Eigen::Vector2d(30.4, 10.6));
}

TEST(Render, MarkingsDrawn) {
  const CameraBase base = synthetic_base();
  const FieldModel field = standard_soccer_field();
  const GrayImage img = render_markings({base, {40, -10, 1500}}, field);
  EXPECT_EQ(img.width, 1280);
  int bright = 0;
  for (auto p : img.pixels) bright += p > 128;
  EXPECT_GT(bright, 500);
}

TEST(Experiments, NoiseTrialsIndependentOfWorkers) {
  ExperimentConfig a = tiny_config();
  a.workers = 1;
  ExperimentConfig b = a;
  b.workers = 3;
  const SyntheticScene scene = generate_scene(a);
  const auto ra = run_noise_trials(scene, a, 2.0);
  const auto rb = run_noise_trials(scene, b, 2.0);
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].failed, rb[i].failed);
    EXPECT_EQ(ra[i].eval.rotation_error, rb[i].eval.rotation_error);
    EXPECT_EQ(ra[i].eval.focal_error, rb[i].eval.focal_error);
    EXPECT_EQ(ra[i].eval.iou, rb[i].eval.iou);
  }
}

TEST(Experiments, SummarizeUsesSampleStd) {
  std::vector<TrialOutcome> o(3);
  o[0].eval.rotation_error = 1.0;
  o[1].eval.rotation_error = 2.0;
  o[2].failed = true;
  const SweepRow row = summarize(0.5, o);
  EXPECT_EQ(row.fail_count, 1);
  EXPECT_EQ(row.trials, 3);
  EXPECT_DOUBLE_EQ(row.mean_rot_err_deg, 1.5);
  EXPECT_NEAR(row.std_rot_err_deg, std::sqrt(0.5), 1e-12);
}

TEST(Experiments, SweepOutputFormats) {
  const ExperimentConfig c = tiny_config();
  const SyntheticScene scene = generate_scene(c);
  const SweepResult sweep = run_noise_sweep(scene, c);
  ASSERT_EQ(sweep.rows.size(), 2u);
  std::ostringstream csv;
  write_sweep(csv, sweep, OutputFormat::Csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
            "sigma,mean_rot_err_deg,std_rot_err_deg,mean_focal_err_px,std_focal_err_px,mean_iou,fail_count");
  std::ostringstream js;
  write_sweep(js, sweep, OutputFormat::JsonLike);
  const auto parsed = nlohmann::json::parse(js.str());
  EXPECT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[1]["sigma"], 3.0);
  EXPECT_THROW(parse_output_format("xml"), InvalidArgument);
}

TEST(Experiments, ReferenceGridAndTrainingSet) {
  ExperimentConfig c;
  c.forest_bank_size = 600;
  const auto poses = reference_poses(c);
  ASSERT_EQ(poses.size(), 20u);
  for (const auto& p : poses) {
    EXPECT_GE(p.pan, c.pan_range.min);
    EXPECT_LE(p.pan, c.pan_range.max);
    EXPECT_EQ(p.focal_length, c.reference_focal);
  }
  const SyntheticScene scene = generate_scene(c, c.forest_bank_size);
  const auto samples = build_training_set(scene, c);
  EXPECT_GT(samples.size(), 100u);
  for (const auto& s : samples) EXPECT_EQ(s.descriptor.size(), c.descriptor_dim);
}
