#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace ptzcalib {

struct LmOptions {
  double initial_lambda = 1e-3;
  double lambda_factor = 10.0;
  double max_lambda = 1e16;
  int max_iterations = 100;
  double step_tolerance = 1e-10;
  double relative_cost_tolerance = 1e-12;
};

template <int N>
struct LmResult {
  Eigen::Matrix<double, N, 1> params;
  double initial_cost = std::numeric_limits<double>::infinity();
  double final_cost = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

/// Levenberg-Marquardt on a small dense problem with a central-difference
/// Jacobian. `residuals(x, r)` fills r and returns false when x is outside
/// the model's domain; such points count as infinite cost. The returned
/// parameters never have a higher cost than x0.
template <int N, typename ResidualFn>
LmResult<N> levenberg_marquardt(ResidualFn&& residuals, const Eigen::Matrix<double, N, 1>& x0,
                                const Eigen::Matrix<double, N, 1>& fd_steps, const LmOptions& options = {}) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  LmResult<N> result;
  result.params = x0;
  Eigen::VectorXd r;
  if (!residuals(x0, r)) return result;

  Vec x = x0;
  double cost = r.squaredNorm();
  result.initial_cost = cost;
  result.final_cost = cost;
  if (cost == 0.0) {
    result.converged = true;
    return result;
  }

  const Eigen::Index m = r.size();
  Eigen::Matrix<double, Eigen::Dynamic, N> jac(m, N);
  Eigen::VectorXd r_plus;
  Eigen::VectorXd r_minus;
  Eigen::VectorXd r_trial;
  double lambda = options.initial_lambda;

  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    for (int k = 0; k < N; ++k) {
      Vec xp = x;
      Vec xm = x;
      xp[k] += fd_steps[k];
      xm[k] -= fd_steps[k];
      if (!residuals(xp, r_plus) || !residuals(xm, r_minus)) {
        // Jacobian undefined at the domain boundary.
        result.params = x;
        result.final_cost = cost;
        return result;
      }
      jac.col(k) = (r_plus - r_minus) / (2.0 * fd_steps[k]);
    }
    const Mat jtj = jac.transpose() * jac;
    const Vec gradient = jac.transpose() * r;

    bool accepted = false;
    while (lambda <= options.max_lambda) {
      Mat damped = jtj;
      for (int k = 0; k < N; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Vec step = damped.ldlt().solve(-gradient);
      if (!step.allFinite()) {
        lambda *= options.lambda_factor;
        continue;
      }
      if (step.norm() < options.step_tolerance) {
        result.params = x;
        result.final_cost = cost;
        result.converged = true;
        return result;
      }
      const Vec trial = x + step;
      if (residuals(trial, r_trial)) {
        const double trial_cost = r_trial.squaredNorm();
        if (trial_cost < cost) {
          const double decrease = cost - trial_cost;
          x = trial;
          r.swap(r_trial);
          const double previous = cost;
          cost = trial_cost;
          lambda = std::max(lambda / options.lambda_factor, 1e-15);
          accepted = true;
          if (decrease < options.relative_cost_tolerance * previous || cost == 0.0) {
            result.params = x;
            result.final_cost = cost;
            result.converged = true;
            return result;
          }
          break;
        }
      }
      lambda *= options.lambda_factor;
    }
    if (!accepted) break;
  }
  result.params = x;
  result.final_cost = cost;
  return result;
}

}  // namespace ptzcalib
