#pragma once

#include <random>

#include "oracles.hpp"
#include "ptzcalib/calib/two_point.hpp"

namespace fixture {

struct TwoPointCase {
  ptzcalib::TwoPointProblem problem;
  ptzcalib::PtzParams truth;
};

// Two image points at least 50 px apart, pushed out to random depths along
// their rays. The camera looks somewhere in front of its base.
inline TwoPointCase random_two_point_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pan(-60.0, 60.0), tilt(-30.0, 10.0), focal(800.0, 5000.0),
      px(0.0, 1280.0), py(0.0, 720.0), depth(10.0, 200.0);
  TwoPointCase c;
  c.problem.base = oracle::random_base(rng);
  c.truth = {pan(rng), tilt(rng), focal(rng)};
  const ptzcalib::PtzCamera cam{c.problem.base, c.truth};
  Eigen::Vector2d a, b;
  do {
    a = {px(rng), py(rng)};
    b = {px(rng), py(rng)};
  } while ((a - b).norm() < 50.0);
  c.problem.corr_a = {c.problem.base.center + depth(rng) * oracle::pixel_direction(cam, a), a};
  c.problem.corr_b = {c.problem.base.center + depth(rng) * oracle::pixel_direction(cam, b), b};
  return c;
}

}  // namespace fixture
