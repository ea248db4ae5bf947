#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "ptzcalib/calib/two_point.hpp"
#include "ptzcalib/core/angles.hpp"
#include "ptzcalib/core/errors.hpp"

using namespace ptzcalib;

namespace {

double world_angle(const TwoPointProblem& p) {
  const Eigen::Vector3d a = p.corr_a.world_point - p.base.center;
  const Eigen::Vector3d b = p.corr_b.world_point - p.base.center;
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace

TEST(TwoPoint, ZeroNoiseRecoversTruth) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto c = fixture::random_two_point_case(rng);
    const CalibSolution sol = calibrate_two_points(c.problem);
    EXPECT_NEAR(wrap_degrees(sol.ptz.pan - c.truth.pan), 0.0, 1e-6) << i;
    EXPECT_NEAR(wrap_degrees(sol.ptz.tilt - c.truth.tilt), 0.0, 1e-6) << i;
    EXPECT_NEAR(sol.ptz.focal_length, c.truth.focal_length, 1e-3) << i;
    EXPECT_LT(sol.reprojection_rmse, 1e-6);
  }
}

TEST(TwoPoint, FocalMatchesBruteForce) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    const auto c = fixture::random_two_point_case(rng);
    const auto closed = focal_from_two_points(c.problem);
    const auto brute = oracle::focal_roots(c.problem.base.principal_point, c.problem.corr_a.pixel,
                                           c.problem.corr_b.pixel, world_angle(c.problem));
    ASSERT_FALSE(closed.empty());
    for (double f : brute) {
      double best = 1e300;
      for (double g : closed) best = std::min(best, std::abs(f - g));
      EXPECT_LT(best, 0.1) << "brute-force root " << f << " missing, case " << i;
    }
    for (double g : closed) {
      if (g < 50.0 || g > 50000.0) continue;
      double best = 1e300;
      for (double f : brute) best = std::min(best, std::abs(f - g));
      EXPECT_LT(best, 0.1) << "closed-form root " << g << " not found by search, case " << i;
    }
  }
}

TEST(TwoPoint, PanTiltMatchesGridSearch) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 20; ++i) {
    const auto c = fixture::random_two_point_case(rng);
    const double f = c.truth.focal_length;
    const auto cands = pan_tilt_from_one_point(c.problem.base, f, c.problem.corr_a);
    ASSERT_FALSE(cands.empty());
    bool truth_found = false;
    for (const auto& cand : cands) {
      if (std::abs(cand.pan) > 88.0 || std::abs(cand.tilt) > 88.0) continue;
      const auto hit = oracle::pan_tilt_grid(c.problem.base, f, c.problem.corr_a.world_point, c.problem.corr_a.pixel,
                                             cand.pan, cand.tilt);
      EXPECT_LE(std::abs(hit.pan - cand.pan), 0.01 + 1e-9) << i;
      EXPECT_LE(std::abs(hit.tilt - cand.tilt), 0.01 + 1e-9) << i;
      if (std::abs(wrap_degrees(cand.pan - c.truth.pan)) < 1e-6 && std::abs(cand.tilt - c.truth.tilt) < 1e-6)
        truth_found = true;
    }
    EXPECT_TRUE(truth_found) << i;
  }
}

TEST(TwoPoint, CandidatesReproject) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100; ++i) {
    const auto c = fixture::random_two_point_case(rng);
    for (const auto& cand : pan_tilt_from_one_point(c.problem.base, c.truth.focal_length, c.problem.corr_a)) {
      const auto p = oracle::project(PtzCamera{c.problem.base, cand}, c.problem.corr_a.world_point);
      ASSERT_TRUE(p.has_value());
      EXPECT_LT((*p - c.problem.corr_a.pixel).norm(), 1e-3);
    }
  }
}

TEST(TwoPoint, FocalConstraintCoefficients) {
  std::mt19937_64 rng(15);
  const auto c = fixture::random_two_point_case(rng);
  const FocalConstraint k = focal_constraint(c.problem);
  // cos of the pixel angle at the true focal equals cos of the world angle.
  EXPECT_NEAR(k.cos_angle(c.truth.focal_length), std::cos(world_angle(c.problem)), 1e-12);
  EXPECT_NEAR(k.d, std::cos(world_angle(c.problem)), 1e-12);
}

TEST(TwoPoint, DegenerateInputs) {
  std::mt19937_64 rng(16);
  auto c = fixture::random_two_point_case(rng);

  auto same_pixel = c.problem;
  same_pixel.corr_b.pixel = same_pixel.corr_a.pixel;
  EXPECT_THROW(calibrate_two_points(same_pixel), DegenerateConfiguration);

  auto same_point = c.problem;
  same_point.corr_b.world_point = same_point.corr_a.world_point;
  EXPECT_THROW(calibrate_two_points(same_point), DegenerateConfiguration);

  auto at_center = c.problem;
  at_center.corr_a.world_point = at_center.base.center;
  EXPECT_THROW(calibrate_two_points(at_center), DegenerateConfiguration);

  // Both points on one ray through the center: zero angle.
  auto collinear = c.problem;
  collinear.corr_b.world_point =
      collinear.base.center + 3.0 * (collinear.corr_a.world_point - collinear.base.center);
  EXPECT_THROW(calibrate_two_points(collinear), DegenerateConfiguration);
}

TEST(TwoPoint, RefineNeverWorseAndRmseFormula) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    auto c = fixture::random_two_point_case(rng);
    std::vector<Correspondence> corr{c.problem.corr_a, c.problem.corr_b};
    for (auto& k : corr) k.pixel += Eigen::Vector2d(noise(rng), noise(rng));
    PtzParams init = c.truth;
    init.pan += 0.3;
    init.focal_length *= 1.05;
    const double before = reprojection_rmse(c.problem.base, init, corr);
    const CalibSolution sol = refine_ptz(c.problem.base, init, corr);
    EXPECT_LE(sol.reprojection_rmse, before + 1e-12);

    double sum = 0.0;
    for (const auto& k : corr) sum += (*oracle::project(PtzCamera{c.problem.base, sol.ptz}, k.world_point) - k.pixel).squaredNorm();
    EXPECT_NEAR(sol.reprojection_rmse, std::sqrt(sum / corr.size()), 1e-9);
  }
}

TEST(TwoPoint, RefineRejectsBadInput) {
  std::mt19937_64 rng(18);
  const auto c = fixture::random_two_point_case(rng);
  std::vector<Correspondence> one{c.problem.corr_a};
  EXPECT_THROW(refine_ptz(c.problem.base, c.truth, one), InvalidArgument);
  std::vector<Correspondence> two{c.problem.corr_a, c.problem.corr_b};
  EXPECT_THROW(refine_ptz(c.problem.base, PtzParams{0, 0, -5}, two), InvalidArgument);
}
