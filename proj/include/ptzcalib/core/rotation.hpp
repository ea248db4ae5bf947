#pragma once

#include <cmath>

#include "ptzcalib/core/angles.hpp"
#include "ptzcalib/core/types.hpp"

namespace ptzcalib {

// Base frame: +z optical axis at zero pan/tilt, +x right, +y down.
// Pan rotates about the base y axis, tilt about the panned x axis; positive
// pan turns right, positive tilt looks up.

/// Q_theta: pan rotation about the camera-frame y axis.
template <typename Scalar>
Matrix3<Scalar> pan_rotation(Scalar pan_deg) {
  using std::cos;
  using std::sin;
  const Scalar p = deg2rad(pan_deg);
  const Scalar c = cos(p);
  const Scalar s = sin(p);
  Matrix3<Scalar> q;
  q << c, Scalar(0), -s,
       Scalar(0), Scalar(1), Scalar(0),
       s, Scalar(0), c;
  return q;
}

/// Q_phi: tilt rotation about the camera-frame x axis.
template <typename Scalar>
Matrix3<Scalar> tilt_rotation(Scalar tilt_deg) {
  using std::cos;
  using std::sin;
  const Scalar t = deg2rad(tilt_deg);
  const Scalar c = cos(t);
  const Scalar s = sin(t);
  Matrix3<Scalar> q;
  q << Scalar(1), Scalar(0), Scalar(0),
       Scalar(0), c, s,
       Scalar(0), -s, c;
  return q;
}

/// Q_phi * Q_theta: base frame -> camera frame.
template <typename Scalar>
Matrix3<Scalar> pan_tilt_rotation(Scalar pan_deg, Scalar tilt_deg) {
  return tilt_rotation(tilt_deg) * pan_rotation(pan_deg);
}

/// Unit base-frame direction of a ray.
template <typename Scalar>
Vector3<Scalar> ray_direction(Scalar pan_deg, Scalar tilt_deg) {
  using std::cos;
  using std::sin;
  const Scalar p = deg2rad(pan_deg);
  const Scalar t = deg2rad(tilt_deg);
  return Vector3<Scalar>(cos(t) * sin(p), -sin(t), cos(t) * cos(p));
}

inline Eigen::Vector3d ray_direction(const Ray& ray) {
  return ray_direction(ray.pan, ray.tilt);
}

/// Pan/tilt of a base-frame direction (need not be normalized).
template <typename Derived>
Ray direction_to_ray(const Eigen::MatrixBase<Derived>& d) {
  const double horizontal = std::hypot(double(d.x()), double(d.z()));
  return {rad2deg(std::atan2(double(d.x()), double(d.z()))),
          rad2deg(std::atan2(-double(d.y()), horizontal))};
}

}  // namespace ptzcalib
