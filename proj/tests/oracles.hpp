#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library code it is used to check.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ptzcalib/core/types.hpp"

namespace oracle {

inline double rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double deg(double r) { return r * 180.0 / std::numbers::pi; }

// Pan turns right about the base y axis (y down), tilt looks up about the
// panned x axis. World -> camera.
inline Eigen::Matrix3d rotation(double pan_deg, double tilt_deg, const Eigen::Matrix3d& base_rotation) {
  const Eigen::Matrix3d pan = Eigen::AngleAxisd(-rad(pan_deg), Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d tilt = Eigen::AngleAxisd(-rad(tilt_deg), Eigen::Vector3d::UnitX()).toRotationMatrix();
  return tilt * pan * base_rotation;
}

inline std::optional<Eigen::Vector2d> project(const ptzcalib::PtzCamera& cam, const Eigen::Vector3d& X) {
  const Eigen::Vector3d p = rotation(cam.ptz.pan, cam.ptz.tilt, cam.base.base_rotation) * (X - cam.base.center);
  if (p.z() <= 0.0) return std::nullopt;
  const double f = cam.ptz.focal_length;
  return Eigen::Vector2d(cam.base.principal_point.x() + f * p.x() / p.z(),
                         cam.base.principal_point.y() + f * p.y() / p.z());
}

// World direction through a pixel.
inline Eigen::Vector3d pixel_direction(const ptzcalib::PtzCamera& cam, const Eigen::Vector2d& px) {
  const double f = cam.ptz.focal_length;
  const Eigen::Vector3d d((px.x() - cam.base.principal_point.x()) / f, (px.y() - cam.base.principal_point.y()) / f,
                          1.0);
  return (rotation(cam.ptz.pan, cam.ptz.tilt, cam.base.base_rotation).transpose() * d).normalized();
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

// A base looking roughly horizontally: random yaw about world z, small
// roll, mapped so that base +z is horizontal and base +y points down.
inline ptzcalib::CameraBase random_base(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> yaw(-180.0, 180.0), small(-5.0, 5.0), pos(-30.0, 30.0),
      height(5.0, 40.0);
  Eigen::Matrix3d level;
  level << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  ptzcalib::CameraBase b;
  b.base_rotation = Eigen::AngleAxisd(rad(small(rng)), Eigen::Vector3d::UnitZ()).toRotationMatrix() *
                    Eigen::AngleAxisd(rad(small(rng)), Eigen::Vector3d::UnitX()).toRotationMatrix() * level *
                    Eigen::AngleAxisd(rad(yaw(rng)), Eigen::Vector3d::UnitZ()).toRotationMatrix();
  b.center = Eigen::Vector3d(pos(rng), pos(rng), height(rng));
  b.principal_point = Eigen::Vector2d(640.0, 360.0);
  b.image_size = {1280, 720};
  return b;
}

// Angle between the two world rays seen through two pixels at focal f.
inline double pixel_angle(double f, const Eigen::Vector2d& pp, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector3d da((a.x() - pp.x()) / f, (a.y() - pp.y()) / f, 1.0);
  const Eigen::Vector3d db((b.x() - pp.x()) / f, (b.y() - pp.y()) / f, 1.0);
  return std::atan2(da.cross(db).norm(), da.dot(db));
}

// Brute-force focal search: scan f on a fine grid for sign changes of the
// angle mismatch, then bisect.
inline std::vector<double> focal_roots(const Eigen::Vector2d& pp, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                       double world_angle, double f_min = 50.0, double f_max = 50000.0,
                                       double step = 0.5) {
  auto g = [&](double f) { return pixel_angle(f, pp, a, b) - world_angle; };
  std::vector<double> roots;
  double prev_f = f_min;
  double prev_g = g(prev_f);
  for (double f = f_min + step; f <= f_max; f += step) {
    const double cur = g(f);
    if (prev_g == 0.0) {
      roots.push_back(prev_f);
    } else if ((prev_g < 0.0) != (cur < 0.0)) {
      double lo = prev_f, hi = f, glo = prev_g;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_f = f;
    prev_g = cur;
  }
  return roots;
}

// Pan/tilt grid search at a fixed focal length: 1 degree coarse grid, then
// a 0.01 degree grid around the best coarse cells. Returns the grid point
// with the smallest reprojection error of X.
struct GridHit {
  double pan = 0.0;
  double tilt = 0.0;
  double error = 0.0;
};

inline GridHit pan_tilt_grid(const ptzcalib::CameraBase& base, double f, const Eigen::Vector3d& X,
                             const Eigen::Vector2d& pixel, double near_pan, double near_tilt, double window = 1.5) {
  auto err = [&](double pan, double tilt) {
    const auto p = project(ptzcalib::PtzCamera{base, {pan, tilt, f}}, X);
    return p ? (*p - pixel).norm() : std::numeric_limits<double>::infinity();
  };
  GridHit best{0, 0, std::numeric_limits<double>::infinity()};
  const double p0 = std::round(near_pan), t0 = std::round(near_tilt);
  for (int i = -static_cast<int>(window * 100); i <= static_cast<int>(window * 100); ++i)
    for (int j = -static_cast<int>(window * 100); j <= static_cast<int>(window * 100); ++j) {
      const double pan = p0 + i * 0.01, tilt = t0 + j * 0.01;
      const double e = err(pan, tilt);
      if (e < best.error) best = {pan, tilt, e};
    }
  return best;
}

// Coarse 1 degree scan over the full pan/tilt domain; every local minimum
// cell of the reprojection error.
inline std::vector<std::pair<double, double>> coarse_minima(const ptzcalib::CameraBase& base, double f,
                                                            const Eigen::Vector3d& X, const Eigen::Vector2d& pixel) {
  const int np = 180, nt = 179;
  std::vector<double> e(static_cast<std::size_t>(np) * nt);
  auto at = [&](int i, int j) -> double& { return e[static_cast<std::size_t>(i) * nt + j]; };
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nt; ++j) {
      const auto p = project(ptzcalib::PtzCamera{base, {-90.0 + i, -89.0 + j, f}}, X);
      at(i, j) = p ? (*p - pixel).norm() : std::numeric_limits<double>::infinity();
    }
  std::vector<std::pair<double, double>> out;
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nt; ++j) {
      if (!std::isfinite(at(i, j))) continue;
      bool minimum = true;
      for (int di = -1; di <= 1 && minimum; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const int a = i + di, b = j + dj;
          if ((di || dj) && a >= 0 && a < np && b >= 0 && b < nt && at(a, b) < at(i, j)) {
            minimum = false;
            break;
          }
        }
      if (minimum) out.emplace_back(-90.0 + i, -89.0 + j);
    }
  return out;
}

// Fraction of the field-plus-margin rectangle covered by both / either
// footprint, on a regular grid of cell x cell meters. A plane point is in a
// footprint when it is in front of the camera and projects into the image.
inline double raster_iou(const ptzcalib::PtzCamera& a, const ptzcalib::PtzCamera& b, double length, double width,
                         double margin, double cell) {
  long both = 0, either = 0;
  auto inside = [](const ptzcalib::PtzCamera& cam, const Eigen::Vector3d& X) {
    const auto p = project(cam, X);
    return p && p->x() >= 0.0 && p->y() >= 0.0 && p->x() <= cam.base.image_size.width &&
           p->y() <= cam.base.image_size.height;
  };
  for (double x = -margin + 0.5 * cell; x < length + margin; x += cell)
    for (double y = -margin + 0.5 * cell; y < width + margin; y += cell) {
      const Eigen::Vector3d X(x, y, 0.0);
      const bool ia = inside(a, X), ib = inside(b, X);
      both += ia && ib;
      either += ia || ib;
    }
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

// Rotation angle between two world->camera rotations, degrees.
inline double rotation_angle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = std::clamp(((a * b.transpose()).trace() - 1.0) / 2.0, -1.0, 1.0);
  return deg(std::acos(c));
}

}  // namespace oracle
